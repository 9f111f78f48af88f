#include "relaxmia/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace relaxmia::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return fields;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::kBinary ? "binary" : "real_valued";
}

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "binary") return FeatureKind::kBinary;
  if (name == "real_valued" || name == "real") return FeatureKind::kRealValued;
  throw ConfigError("unknown feature kind '" + std::string(name) + "'");
}

std::string_view to_string(SyntheticMode mode) {
  return mode == SyntheticMode::kBinaryRecords ? "binary_records" : "gaussian_blobs";
}

SyntheticMode parse_synthetic_mode(std::string_view name) {
  if (name == "gaussian_blobs") return SyntheticMode::kGaussianBlobs;
  if (name == "binary_records") return SyntheticMode::kBinaryRecords;
  throw ConfigError("unknown synthetic mode '" + std::string(name) + "'");
}

std::string_view to_string(FoldRole role) {
  switch (role) {
    case FoldRole::kTargetTrain: return "target_train";
    case FoldRole::kTargetTest: return "target_test";
    case FoldRole::kShadowTrain: return "shadow_train";
    case FoldRole::kShadowTest: return "shadow_test";
    case FoldRole::kSurrogate: return "surrogate";
  }
  return "unknown";
}

Matrix Dataset::features_of(std::span<const std::size_t> indices) const {
  return features.select_rows(indices);
}

std::vector<int> Dataset::labels_of(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

void Dataset::validate() const {
  if (features.rows() != labels.size()) throw DimensionError("feature rows differ from label count");
  if (num_classes < 2) throw ConfigError("dataset needs at least 2 classes");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DimensionError("label outside [0, num_classes)");
    }
  }
  if (labels.size() < num_classes) throw ConfigError("dataset has fewer samples than classes");
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2 || spec.dim == 0 || spec.per_class == 0) {
    throw ConfigError("synthetic spec needs classes >= 2 and positive dim / per_class");
  }
  if (!(spec.class_separation >= 0.0) || !(spec.noise_sigma > 0.0)) {
    throw ConfigError("synthetic spec needs class_separation >= 0 and noise_sigma > 0");
  }
  Rng rng(spec.seed);
  Dataset ds;
  ds.num_classes = spec.classes;
  ds.feature_kind = spec.mode == SyntheticMode::kBinaryRecords ? FeatureKind::kBinary
                                                                : FeatureKind::kRealValued;
  ds.name = std::string(to_string(spec.mode));
  ds.features = Matrix(spec.classes * spec.per_class, spec.dim);
  ds.labels.reserve(spec.classes * spec.per_class);
  for (std::size_t j = 0; j < spec.dim; ++j) ds.feature_names.push_back("f" + std::to_string(j));

  // Class centres: uniform directions on the sphere of radius class_separation.
  Matrix centres(spec.classes, spec.dim);
  for (std::size_t c = 0; c < spec.classes; ++c) {
    auto row = centres.row(c);
    double norm = 0.0;
    while (norm == 0.0) {
      for (double& v : row) v = rng.normal();
      norm = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
    }
    for (double& v : row) v *= spec.class_separation / norm;
  }

  std::size_t n = 0;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t k = 0; k < spec.per_class; ++k, ++n) {
      auto row = ds.features.row(n);
      for (std::size_t j = 0; j < spec.dim; ++j) {
        const double latent = centres(c, j) + spec.noise_sigma * rng.normal();
        row[j] = spec.mode == SyntheticMode::kBinaryRecords ? (latent > 0.0 ? 1.0 : 0.0) : latent;
      }
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  return ds;
}

SplitPlan five_fold_split(std::size_t n, std::uint64_t seed) {
  if (n < 5) throw ConfigError("five-fold split needs at least 5 samples, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  SplitPlan plan;
  std::size_t offset = 0;
  for (std::size_t f = 0; f < 5; ++f) {
    const std::size_t size = n / 5 + (f < n % 5 ? 1 : 0);
    plan.folds[f].assign(order.begin() + offset, order.begin() + offset + size);
    offset += size;
  }
  return plan;
}

Dataset parse_csv(std::string_view text, std::string_view label_column, FeatureKind feature_kind,
                  std::string name) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      lines.push_back(text.substr(start, end - start));
      start = end + 1;
    }
  }
  // Trailing blank lines are tolerated; interior blank lines are not.
  while (!lines.empty() && split_fields(lines.back()) == std::vector<std::string_view>{""}) {
    lines.pop_back();
  }
  if (lines.empty()) throw ParseError("empty CSV input", 1);

  const auto header = split_fields(lines.front());
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw ParseError("label column '" + std::string(label_column) + "' not in header", 1);
  }
  const std::size_t label_index = static_cast<std::size_t>(label_it - header.begin());
  if (lines.size() < 2) throw ParseError("CSV has a header but no data rows", 1);

  Dataset ds;
  ds.name = std::move(name);
  ds.feature_kind = feature_kind;
  ds.label_name = std::string(label_column);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != label_index) ds.feature_names.emplace_back(header[j]);
  }
  const std::size_t dim = ds.feature_names.size();
  std::vector<double> values;
  std::vector<double> raw_labels;
  values.reserve((lines.size() - 1) * dim);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split_fields(lines[li]);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       li + 1);
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v)) {
        throw ParseError("non-numeric cell '" + std::string(fields[j]) + "'", li + 1);
      }
      if (j == label_index) {
        raw_labels.push_back(v);
      } else {
        values.push_back(v);
      }
    }
  }
  ds.features = Matrix(raw_labels.size(), dim, std::move(values));

  std::map<double, int> dense;
  for (double v : raw_labels) dense.emplace(v, 0);
  int next = 0;
  for (auto& [key, index] : dense) index = next++;
  ds.num_classes = dense.size();
  for (double v : raw_labels) ds.labels.push_back(dense.at(v));
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, std::string_view label_column,
                 FeatureKind feature_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), label_column, feature_kind, path.stem().string());
}

std::string to_csv(const Dataset& dataset) {
  std::string out;
  for (const auto& name : dataset.feature_names) out += name + ",";
  out += dataset.label_name + "\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    for (double v : dataset.features.row(i)) out += format_double(v) + ",";
    out += std::to_string(dataset.labels[i]) + "\n";
  }
  return out;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_csv(dataset);
}

std::vector<std::vector<std::size_t>> batch_iter(std::span<const std::size_t> indices,
                                                 std::size_t batch_size, std::uint64_t seed,
                                                 bool shuffle) {
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  std::vector<std::size_t> order(indices.begin(), indices.end());
  if (shuffle) {
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

}  // namespace relaxmia::data
