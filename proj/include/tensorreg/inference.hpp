#pragma once

#include "tensorreg/coeff.hpp"
#include "tensorreg/dataset.hpp"

#include <vector>

namespace tensorreg {

/// Score vector and Fisher information over the coefficient-array parameters,
/// ordered (vec G, vec B_0, ..., vec B_{D-1}). In restricted mode the entries
/// of each B_d's fixed leading R_d x R_d block are deleted, leaving
/// prod R_d + sum p_d R_d - sum R_d^2 free parameters. gamma, when present,
/// enters the linear predictor as a fixed offset.
struct ScoreInfo {
  Vector score;
  Matrix info;
  bool restricted = false;
};

/// Indices of the free parameters within the full (vec G, vec B_0, ...)
/// layout under the restricted parameterization.
std::vector<Index> restricted_index_map(std::span<const Index> dims,
                                        std::span<const Index> ranks);

/// Gradient of eta = <B, X> with respect to (vec G, vec B_0,...,vec B_{D-1}).
/// The G block is the core-design row (B_{D-1} (x) ... (x) B_0)^T vec X; the
/// B_d block is the factor-design row. Neither Kronecker product nor the
/// Jacobians J_d are materialized.
Vector eta_gradient(const DenseTensor& x, const TuckerCoeff& coeff);

/// Hessian of eta in the same layout. The G-G block and the diagonal
/// B_d-B_d blocks are exactly zero; the off-diagonal blocks are retrieved
/// from mode-(d,d') matricizations.
Matrix eta_hessian(const DenseTensor& x, const TuckerCoeff& coeff);

/// Score sum_i (y_i - mu_i) mu'(eta_i)/sigma_i^2 grad eta(x_i) and Fisher
/// information sum_i [mu'(eta_i)]^2/sigma_i^2 grad eta grad eta^T.
ScoreInfo score_and_info(const Dataset& ds, const TuckerCoeff& coeff, const GlmFamily& f,
                         bool restricted);

/// Observed Hessian of the log-likelihood for canonical links:
/// -sum_i w_i grad eta grad eta^T + sum_i u_i hess eta(x_i).
Matrix observed_hessian(const Dataset& ds, const TuckerCoeff& coeff, const GlmFamily& f);

struct IdentifiabilityReport {
  bool identifiable = false;
  Index rank = 0;
  Index deficiency = 0;
};

/// Local identifiability at coeff: nonsingularity of the restricted
/// information matrix, judged by numerical rank with threshold
/// dim * machine epsilon * largest singular value.
IdentifiabilityReport local_identifiability(const Dataset& ds, const TuckerCoeff& coeff,
                                            const GlmFamily& f);

/// sqrt(diag(info^{-1})). Throws when the information matrix is singular,
/// pointing the caller at local_identifiability.
Vector standard_errors(const ScoreInfo& si);

}  // namespace tensorreg
