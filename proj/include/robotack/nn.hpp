#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "robotack/types.hpp"

namespace robotack::nn {

using Features = std::array<double, 4>;  // delta_t, v_rel, a_rel, k

inline const std::vector<int> kDefaultDims{4, 100, 100, 50, 1};

struct Normalization {
  Features input_mean{0, 0, 0, 0};
  Features input_std{1, 1, 1, 1};
  double output_mean = 0.0;
  double output_std = 1.0;
};

struct Mlp {
  std::vector<int> layer_dims = kDefaultDims;
  std::vector<Eigen::MatrixXd> weights;  // out x in per layer
  std::vector<Eigen::VectorXd> biases;
  double dropout_rate = 0.1;  // training only
  AttackVector attack_vector = AttackVector::MoveOut;
  ObjectClass target_class = ObjectClass::Vehicle;
  Normalization norm;

  // Zero weights and biases with the given shape.
  static Mlp zeros(const std::vector<int>& dims);
  // He-uniform weights, zero biases.
  static Mlp random(const std::vector<int>& dims, std::uint64_t seed);
  void check_shapes() const;  // throws ConfigError
  std::size_t parameter_count() const;
};

// Deterministic inference (no dropout) in meters.
double forward(const Mlp& mlp, const Features& input);
// Same on already-normalized input, returning normalized output.
double forward_normalized(const Mlp& mlp, const Eigen::VectorXd& x);

struct ShRow {
  double delta_t = 0.0;
  double v_rel = 0.0;
  double a_rel = 0.0;
  int k = 0;
  double label = 0.0;  // delta at t + k

  Features features() const { return {delta_t, v_rel, a_rel, static_cast<double>(k)}; }
  friend bool operator==(const ShRow&, const ShRow&) = default;
};

struct ShDataset {
  std::vector<ShRow> rows;
  std::size_t skipped = 0;  // collection attempts that never reached the trigger

  // Seeded disjoint split; train_fraction of rows go to the first part.
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(double train_fraction,
                                                                      std::uint64_t seed) const;
};

void write_dataset(std::ostream& out, const ShDataset& ds);
void write_dataset(const std::filesystem::path& path, const ShDataset& ds);
ShDataset read_dataset(std::istream& in);
ShDataset read_dataset(const std::filesystem::path& path);

struct TrainConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 64;
  int epochs = 500;
  int patience = 60;  // early stopping on validation loss; 0 disables
  double train_fraction = 0.6;
  std::uint64_t seed = 0;
  std::vector<int> layer_dims = kDefaultDims;
  double dropout_rate = 0.1;
};

struct TrainResult {
  Mlp mlp;
  std::vector<double> train_loss;  // per epoch, full train split, no dropout, normalized MSE
  std::vector<double> val_loss;
  int best_epoch = 0;
  double val_mae = 0.0;  // meters, best weights
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> val_idx;
};

// Adam on mean squared error over z-scored inputs and label. Keeps the
// weights of the best validation epoch. Throws RuntimeFailure on an empty
// split or a non-finite loss.
TrainResult train(const ShDataset& ds, const TrainConfig& cfg, AttackVector tag = AttackVector::MoveOut,
                  ObjectClass cls = ObjectClass::Vehicle);

double mean_abs_error(const Mlp& mlp, const ShDataset& ds, const std::vector<std::size_t>& idx);

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool at_kink = false;  // input sits within h of a ReLU kink; not checked
};

// Backprop gradient of 0.5 (y - target)^2 (normalized space, no dropout)
// against central differences with step h. Inputs whose hidden
// pre-activations come within 10 h of zero are reported as at_kink.
GradCheck grad_check(const Mlp& mlp, const Eigen::VectorXd& input, double target, double h = 1e-5);

constexpr int kWeightsSchema = 1;
std::string weights_to_json(const Mlp& mlp);
Mlp weights_from_json(const std::string& text, const std::vector<int>& expected_dims = {});
void save_weights(const Mlp& mlp, const std::filesystem::path& path);
// Throws ConfigError on schema mismatch, corrupt content or unexpected dims.
Mlp load_weights(const std::filesystem::path& path, const std::vector<int>& expected_dims = {});

}  // namespace robotack::nn
