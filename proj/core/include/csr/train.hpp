#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "csr/grid.hpp"
#include "csr/model.hpp"
#include "csr/rng.hpp"

namespace csr {

enum class LossKind { mse, dual_resolution, de_regularized };

std::string loss_kind_name(LossKind kind);

struct TrainConfig {
  LossKind loss = LossKind::mse;
  double lambda = 0.0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;  // Adam denominator offset
  long steps = 0;
  int batch = 16;
  int chip = 48;  // LR pixels
  std::uint64_t seed = 0;
  bool with_de = true;  // build the model with the enforcement head
};

// Flat key=value file; keys: loss, lambda, lr, beta1, beta2, epsilon, steps,
// batch, chip, seed, de. Blank lines and #-comments allowed. Unknown keys
// and malformed values raise ConfigError with the offending line number.
TrainConfig parse_train_config(std::istream& in);
TrainConfig load_train_config(const std::string& path);

// One of the 8 dihedral transforms of a square grid: element & 3 selects the
// quarter-turn count, element & 4 a horizontal flip applied first.
Grid dihedral(const Grid& g, int element);

struct ChipPair {
  Grid lr;
  Grid hr;
};

// Applies one uniformly chosen dihedral transform to both chips. Raises
// NotSquare for non-square chips.
ChipPair augment(const ChipPair& pair, Rng& rng);

struct LogRow {
  long step = 0;
  double loss = 0.0;
  bool has_val = false;
  double val_mse = 0.0;
  double val_psnr = 0.0;
};

struct TrainResult {
  ModelSpec spec;
  Weights weights;
  std::vector<LogRow> log;
  double final_val_mse = 0.0;
  double final_val_psnr = 0.0;
  double final_val_correction = 0.0;  // DE models only
  bool has_correction = false;

  // Validation MSE logged at the given step (exact match).
  double val_mse_at(long step) const;
};

// Adam with bias correction; step() applies one update in place.
template <typename T>
class Adam {
 public:
  Adam(const ModelSpec& spec, double lr, double beta1, double beta2,
       double epsilon);

  void step(WeightsT<T>& weights, const WeightsT<T>& grads);
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }

 private:
  WeightsT<T> m_, v_;
  double lr_, beta1_, beta2_, epsilon_;
  long t_ = 0;
};

// Trains the model on normalized HR grids. Chips are sampled uniformly with
// random dihedral augmentation; LR inputs are produced by 2D-average
// downsampling of the HR chip. The last max(1, n/5) images are held out for
// validation (the single image itself when n == 1). Validation runs every
// 100 steps and at the final step. Deterministic for a fixed seed.
// Raises EmptyDataset when no image can supply a chip and DivergedLoss when
// the loss stops being finite.
TrainResult train(const ModelSpec& spec, const TrainConfig& config,
                  const std::vector<Grid>& dataset);

// CSV log: a "# loss=..." provenance line, then "step,loss,val_mse,val_psnr"
// rows (validation columns empty when not measured that step).
void write_train_log_csv(const TrainResult& result, const TrainConfig& config,
                         std::ostream& out);

}  // namespace csr
