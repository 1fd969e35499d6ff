#pragma once

#include "tensorreg/dataset.hpp"
#include "tensorreg/estimator.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tensorreg {

enum class SignalKind {
  square,
  cross,
  disk,
  t_shape,
  triangle,
  butterfly,
  random_tucker,
  random_drank
};

/// Signal generator spec. Named shapes are binary 2-D masks whose geometry
/// scales with the grid (documented per shape in make_signal); random kinds
/// draw a Tucker-structured tensor with iid standard-normal core and factor
/// entries, so random_drank has mode-d matricization ranks equal to `ranks`
/// almost surely.
struct SignalSpec {
  SignalKind kind = SignalKind::square;
  std::vector<Index> dims;
  std::vector<Index> ranks;  // random kinds only
  std::uint64_t seed = 0;
};

DenseTensor make_signal(const SignalSpec& s);

/// Noise scale for the normal family: unit variance, or the empirical
/// variance of the n simulated linear predictors divided by 10.
enum class NoiseMode { var_mu_over_10, unit };

/// Covariates (and z when gamma is nonempty) iid standard normal; the
/// response follows the family through its canonical link. The noise mode
/// applies to the normal family only.
Dataset simulate_dataset(const DenseTensor& b_true, const Vector& gamma, Index n,
                         const GlmFamily& f, NoiseMode noise, std::uint64_t seed);

/// Root mean squared entrywise error between two same-shape tensors.
double rmse(const DenseTensor& b_hat, const DenseTensor& b_true);

enum class Protocol { shape_recovery, consistency_curve, tucker_vs_cp };

struct RepOutcome {
  std::uint64_t seed = 0;
  double rmse = 0.0;
  double deviance = 0.0;
  bool converged = false;
  bool failed = false;
  double seconds = 0.0;
};

struct SimResult {
  std::string label;
  double rmse_mean = 0.0;
  double rmse_sd = 0.0;  // 0 when a single replication
  int replications = 0;
  std::vector<RepOutcome> per_rep;
};

struct ReplicateParams {
  std::vector<Index> dims;
  std::vector<Index> ranks;    // Tucker orders, or d-ranks for tucker_vs_cp
  std::vector<Index> n_grid;   // consistency_curve sample sizes
  Index n = 0;                 // sample size for the other protocols
  GlmFamily family;
  NoiseMode noise = NoiseMode::unit;
  SignalKind shape = SignalKind::square;  // shape_recovery
  std::vector<Index> orders;              // shape_recovery TR(r) values
  Index gamma_len = 0;                    // length of the all-ones gamma
  int n_starts = 2;
  double tol = 1e-6;
  int max_iter = 200;
  int threads = 1;
};

struct ReplicateOutput {
  std::vector<SimResult> results;
  /// shape_recovery: first-replication coefficient estimate per order.
  std::vector<std::pair<std::string, DenseTensor>> estimates;
};

/// Replication harness. Per-replication seeds are base_seed + i; every rep
/// draws its own truth (random protocols), simulates a dataset and fits.
///  - consistency_curve: one SimResult per n in n_grid (Tucker at `ranks`).
///  - tucker_vs_cp: truth with d-ranks `ranks`; Tucker at R_d = r_d and CP at
///    R = max r_d on the same data; results labeled "tucker" and "cp".
///  - shape_recovery: fixed 2-D shape; one SimResult per TR(r) order, with
///    deviance recorded per rep.
/// Fit errors are recorded per replication, not fatal.
ReplicateOutput replicate(Protocol protocol, const ReplicateParams& params, int n_reps,
                          std::uint64_t base_seed);

}  // namespace tensorreg
