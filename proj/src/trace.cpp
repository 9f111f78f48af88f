#include "relaxmia/trace.hpp"

#include <cstdio>
#include <sstream>

#include "relaxmia/common.hpp"

namespace relaxmia {

std::string TrainTrace::to_csv() const {
  std::string out(kTraceCsvHeader);
  out += "\n";
  char line[512];
  for (const auto& r : epochs) {
    std::snprintf(line, sizeof(line), "%d,%zu,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  r.epoch, r.branch_desc, r.branch_asc, r.branch_flat, r.train_loss_mean,
                  r.train_loss_var, r.test_loss_mean, r.train_acc1, r.test_acc1, r.train_acc5,
                  r.test_acc5, r.lr);
    out += line;
  }
  return out;
}

TrainTrace TrainTrace::from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kTraceCsvHeader) throw ParseError("bad trace header", 1);
  TrainTrace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    EpochRecord r;
    const int n = std::sscanf(line.c_str(), "%d,%zu,%zu,%zu,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &r.epoch,
                              &r.branch_desc, &r.branch_asc, &r.branch_flat, &r.train_loss_mean,
                              &r.train_loss_var, &r.test_loss_mean, &r.train_acc1, &r.test_acc1,
                              &r.train_acc5, &r.test_acc5, &r.lr);
    if (n != 12) throw ParseError("malformed trace row", lineno);
    trace.epochs.push_back(r);
  }
  return trace;
}

}  // namespace relaxmia
