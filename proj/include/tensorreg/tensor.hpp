#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace tensorreg {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense D-dimensional array with column-major storage: the first index is
/// fastest, so entry (i_0,...,i_{D-1}) lives at linear offset
///   i_0 + i_1*p_0 + i_2*p_0*p_1 + ...
/// All mode indices in this library are 0-based.
class DenseTensor {
public:
  DenseTensor() = default;

  /// Zero-filled tensor of the given shape.
  explicit DenseTensor(std::vector<Index> dims);

  /// Wrap existing column-major data; data.size() must equal the product
  /// of dims.
  DenseTensor(std::vector<Index> dims, Vector data);

  Index order() const { return static_cast<Index>(dims_.size()); }
  const std::vector<Index>& dims() const { return dims_; }
  Index dim(Index d) const { return dims_[static_cast<std::size_t>(d)]; }
  Index size() const { return data_.size(); }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  double operator[](Index linear) const { return data_[linear]; }
  double& operator[](Index linear) { return data_[linear]; }

  double at(std::span<const Index> idx) const { return data_[offset(idx)]; }
  double& at(std::span<const Index> idx) { return data_[offset(idx)]; }
  double at(std::initializer_list<Index> idx) const {
    return at(std::span<const Index>(idx.begin(), idx.size()));
  }
  double& at(std::initializer_list<Index> idx) {
    return at(std::span<const Index>(idx.begin(), idx.size()));
  }

  Index offset(std::span<const Index> idx) const;

private:
  std::vector<Index> dims_;
  Vector data_;
};

/// Product of a dimension vector, checked against the 2^31 cell limit.
Index checked_cell_count(std::span<const Index> dims);

/// vec(t): the stacked entries. Identical to the storage order.
inline const Vector& vec(const DenseTensor& t) { return t.data(); }

/// Mode-d matricization, a p_d x prod_{d'!=d} p_{d'} matrix. Entry
/// (i_0,...,i_{D-1}) maps to row i_d and column
/// sum_{d'!=d} i_{d'} * prod_{d''<d', d''!=d} p_{d''}.
Matrix matricize(const DenseTensor& t, Index d);

/// Mode-(d,d') matricization: rows indexed by (i_d, i_{d'}) with i_d
/// fastest, columns over the remaining modes in ascending mode order.
Matrix matricize_pair(const DenseTensor& t, Index d, Index dp);

/// Mode-d multiplication: multiplies every mode-d fiber by u, so that
/// matricize(result, d) == u * matricize(t, d). Requires u.cols() == p_d.
DenseTensor mode_multiply(const DenseTensor& t, Index d, const Matrix& u);

/// Kronecker product in the standard block layout.
Matrix kron(const Matrix& a, const Matrix& b);

/// Outer product of D vectors: entry (i_0,...,i_{D-1}) = prod_d v_d[i_d].
DenseTensor outer(std::span<const Vector> vs);
DenseTensor outer(std::initializer_list<Vector> vs);

/// Frobenius inner product <a,b> = <vec a, vec b>.
double inner(const DenseTensor& a, const DenseTensor& b);

/// Index vector pi with vec(t)[pi[k]] = vec(matricize(t,d))[k] for every
/// tensor t of this shape. This is the permutation Pi_d with
/// vec B = Pi_d vec B_(d), stored as indices rather than a dense matrix.
std::vector<Index> mode_permutation(std::span<const Index> dims, Index d);

}  // namespace tensorreg
