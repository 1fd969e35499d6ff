#pragma once

#include "tensorreg/tensor.hpp"

#include <vector>

namespace tensorreg {

/// Tucker-structured coefficient array: core tensor G of shape
/// (R_0,...,R_{D-1}), factor matrices B_d of shape p_d x R_d, and the
/// regular-covariate coefficient vector gamma (may be empty).
struct TuckerCoeff {
  DenseTensor core;
  std::vector<Matrix> factors;
  Vector gamma;

  Index order() const { return core.order(); }
  std::vector<Index> dims() const;
  std::vector<Index> ranks() const { return core.dims(); }
  void validate() const;
};

/// CP-structured coefficient: factor matrices share a single column count R.
struct CpCoeff {
  std::vector<Matrix> factors;
  Vector gamma;

  Index rank() const { return factors.empty() ? 0 : factors[0].cols(); }
  void validate() const;
};

/// Free-parameter count (df, identifiability-adjusted) alongside the raw
/// unadjusted count.
struct ModelSize {
  Index df = 0;
  Index raw_params = 0;
};

/// Full coefficient array from a Tucker representation, computed by
/// successive mode multiplications G x_0 B_0 ... x_{D-1} B_{D-1}. The
/// Kronecker form (B_{D-1} (x) ... (x) B_0) vec G is never materialized.
DenseTensor tucker_reconstruct(const TuckerCoeff& c);

/// Full coefficient array from a CP representation: sum over r of the outer
/// products of the r-th factor columns.
DenseTensor cp_reconstruct(const CpCoeff& c);

/// Embed a CP coefficient as a Tucker coefficient with the superdiagonal
/// core of ones.
TuckerCoeff cp_to_tucker(const CpCoeff& c);

/// Tucker free parameters: df = sum p_d R_d + prod R_d - sum R_d^2 (the last
/// term adjusts for the nonsingular transformation indeterminacy);
/// raw_params omits the adjustment.
ModelSize tucker_df(std::span<const Index> dims, std::span<const Index> ranks);

/// CP free parameters: R(p_0+p_1) - R^2 for D=2, R(sum p_d - D + 1) for D>2.
ModelSize cp_df(std::span<const Index> dims, Index rank);

/// Tucker-minus-CP free-parameter gap at equal orders R_0=...=R_{D-1}=R:
/// 0 for D=2, otherwise R(R^{D-1} - D R + D - 1).
Index df_gap(Index rank, Index order);

/// Bayesian information criterion: -2 loglik + ln(n) df.
double bic(double loglik, Index n, Index df);

}  // namespace tensorreg
