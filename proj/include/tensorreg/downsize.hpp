#pragma once

#include "tensorreg/dataset.hpp"
#include "tensorreg/tensor.hpp"

#include <vector>

namespace tensorreg {

enum class BasisKind { haar_d2, daubechies_d4, identity, custom };

/// Per-mode basis for data downsizing: p x p_tilde with orthonormal columns
/// (custom matrices are the caller's responsibility).
struct BasisSpec {
  BasisKind kind = BasisKind::haar_d2;
  Index p = 0;
  Index p_tilde = 0;
  Matrix custom;

  void validate() const;
};

/// Orthonormal p x p_tilde basis. Wavelet kinds build the full orthogonal
/// transform on the dyadic extension of length 2^ceil(log2 p), order the
/// columns coarsest scale first, restrict to the first p rows, keep the
/// first p_tilde columns, and (for non-dyadic p) re-orthonormalize the
/// truncated columns by a thin QR factorization with a fixed sign
/// convention. Throws if the truncated columns are dependent.
Matrix build_basis(const BasisSpec& s);

/// X_tilde = [[X; B_0^T, ..., B_{D-1}^T]]: successive mode multiplications by
/// the transposed bases, reducing the shape to (p_tilde_0,...,p_tilde_{D-1}).
DenseTensor downsize_tensor(const DenseTensor& x, const std::vector<BasisSpec>& bases);

/// Applies downsize_tensor to every covariate; y and z are unchanged.
Dataset downsize_dataset(const Dataset& ds, const std::vector<BasisSpec>& bases);

}  // namespace tensorreg
