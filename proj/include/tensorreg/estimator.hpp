#pragma once

#include "tensorreg/coeff.hpp"
#include "tensorreg/dataset.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tensorreg {

struct FitOptions {
  std::vector<Index> ranks;
  GlmFamily family;
  double tol = 1e-6;      // relative loglik gain per cycle
  int max_iter = 200;     // full cycles
  int n_starts = 5;
  std::uint64_t seed = 0;
  int threads = 1;
  /// When set, fit from this coefficient instead of random starts
  /// (n_starts is ignored).
  std::optional<TuckerCoeff> init;
};

struct FitResult {
  TuckerCoeff coeff;
  std::vector<double> loglik_trace;  // one entry per full cycle (plus start)
  std::vector<double> block_trace;   // one entry per block update
  double loglik = 0.0;               // dispersion profiled out (normal family)
  double deviance = 0.0;
  double bic = 0.0;
  Index df = 0;  // coefficient-array df; gamma length added into bic's df
  bool converged = false;
  int best_start = 0;
  Index cp_rank = -1;  // >= 0 when produced by fit_cp
};

/// Design matrix for the mode-d factor block: row i is
/// vec( X_{i(d)} (B_{D-1} (x) ... excluding d ... (x) B_0) G_(d)^T ),
/// an n x (p_d R_d) matrix, so that <B, X_i> = vec(B_d) . row_i. The
/// Kronecker factor is applied through successive mode multiplications.
Matrix design_for_factor(const Dataset& ds, Index d, const TuckerCoeff& coeff);

/// Design matrix for the core block: row i is
/// (B_{D-1} (x) ... (x) B_0)^T vec X_i = vec [[X_i; B_0^T,...,B_{D-1}^T]],
/// an n x (prod R_d) matrix, so that <B, X_i> = vec(G) . row_i.
Matrix design_for_core(const Dataset& ds, const TuckerCoeff& coeff);

/// Block-relaxation maximum likelihood for the Tucker tensor regression:
/// gamma from the null model, random factor/core starts, then cyclic GLM
/// updates of B_0..B_{D-1}, G, gamma until the loglik gain drops below tol.
/// Best of n_starts by final loglik (ties to the lowest start index); the
/// winner is canonicalized.
FitResult fit_tucker(const Dataset& ds, const FitOptions& opts);

/// Same block relaxation with the core fixed to the superdiagonal of ones,
/// i.e. the rank-R CP model. The core block is never updated and the result
/// is not canonicalized (the superdiagonal core is the CP normal form).
FitResult fit_cp(const Dataset& ds, Index rank, FitOptions opts);

/// Equivalent representation with the leading R_d x R_d block of every B_d
/// equal to the identity: B_d <- B_d O_d, G <- G x_d O_d^{-1} with
/// O_d = (leading block)^{-1}. Throws if a leading block is singular (a
/// measure-zero event). Reconstruction is unchanged.
TuckerCoeff canonicalize(const TuckerCoeff& c);

struct OrderCandidate {
  std::vector<Index> ranks;
  Index df = 0;
  double loglik = 0.0;
  double deviance = 0.0;
  double bic = 0.0;
  bool converged = false;
  /// Sample-size heuristic: flags ranks with n/(p_d R_d) or n/(prod R_d)
  /// under 2 (normal) or 5 (bernoulli).
  bool size_warning = false;
  std::string warning;
};

struct OrderSelection {
  FitResult best;
  std::size_t best_index = 0;
  std::vector<OrderCandidate> table;
};

/// Fits every candidate rank tuple and returns the BIC argmin (ties broken
/// toward smaller df). Candidates nested inside an already-fitted candidate
/// additionally start from the embedded smaller solution, which keeps the
/// deviance nonincreasing along nested chains.
OrderSelection select_order(const Dataset& ds,
                            const std::vector<std::vector<Index>>& candidates,
                            const FitOptions& opts);

}  // namespace tensorreg
