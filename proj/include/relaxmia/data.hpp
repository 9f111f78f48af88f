#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relaxmia/common.hpp"

namespace relaxmia::data {

enum class FeatureKind { kRealValued, kBinary };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::string name;
  FeatureKind feature_kind = FeatureKind::kRealValued;
  /// Column names used when re-emitting CSV.
  std::vector<std::string> feature_names;
  std::string label_name = "label";

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }

  Matrix features_of(std::span<const std::size_t> indices) const;
  std::vector<int> labels_of(std::span<const std::size_t> indices) const;
  void validate() const;
};

enum class SyntheticMode { kGaussianBlobs, kBinaryRecords };

std::string_view to_string(SyntheticMode mode);
SyntheticMode parse_synthetic_mode(std::string_view name);

struct SyntheticSpec {
  std::size_t classes = 20;
  std::size_t dim = 50;
  std::size_t per_class = 500;
  double class_separation = 4.0;
  double noise_sigma = 1.0;
  SyntheticMode mode = SyntheticMode::kGaussianBlobs;
  std::uint64_t seed = 0;
};

/// Deterministic in the spec. Samples are emitted class by class.
Dataset generate_synthetic(const SyntheticSpec& spec);

enum class FoldRole : std::size_t {
  kTargetTrain = 0,
  kTargetTest = 1,
  kShadowTrain = 2,
  kShadowTest = 3,
  kSurrogate = 4,
};

std::string_view to_string(FoldRole role);

struct SplitPlan {
  std::array<std::vector<std::size_t>, 5> folds;

  const std::vector<std::size_t>& fold(FoldRole role) const {
    return folds[static_cast<std::size_t>(role)];
  }
};

/// Seeded shuffle of [0, n) followed by contiguous slicing into five folds;
/// the first n % 5 folds receive one extra index.
SplitPlan five_fold_split(std::size_t n, std::uint64_t seed);
inline SplitPlan five_fold_split(const Dataset& dataset, std::uint64_t seed) {
  return five_fold_split(dataset.size(), seed);
}

/// Reads a rectangular numeric CSV with a header row. Labels are re-indexed
/// densely in ascending order of their original values.
Dataset load_csv(const std::filesystem::path& path, std::string_view label_column,
                 FeatureKind feature_kind);
Dataset parse_csv(std::string_view text, std::string_view label_column, FeatureKind feature_kind,
                  std::string name = "csv");
std::string to_csv(const Dataset& dataset);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

/// ceil(|indices| / batch_size) batches; the last may be short.
std::vector<std::vector<std::size_t>> batch_iter(std::span<const std::size_t> indices,
                                                 std::size_t batch_size, std::uint64_t seed,
                                                 bool shuffle);

}  // namespace relaxmia::data
