#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace relaxmia {

/// One row of the training trace. Accuracies are percentages.
struct EpochRecord {
  int epoch = 0;
  std::size_t branch_desc = 0;
  std::size_t branch_asc = 0;
  std::size_t branch_flat = 0;
  double train_loss_mean = 0.0;
  double train_loss_var = 0.0;
  double test_loss_mean = 0.0;
  double train_acc1 = 0.0;
  double test_acc1 = 0.0;
  double train_acc5 = 0.0;
  double test_acc5 = 0.0;
  double lr = 0.0;

  std::size_t batches() const { return branch_desc + branch_asc + branch_flat; }
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;

  std::string to_csv() const;
  static TrainTrace from_csv(std::string_view text);
};

inline constexpr std::string_view kTraceCsvHeader =
    "epoch,branch_desc,branch_asc,branch_flat,train_loss_mean,train_loss_var,test_loss_mean,"
    "train_acc1,test_acc1,train_acc5,test_acc5,lr";

}  // namespace relaxmia
