#include "tensorreg/tensor.hpp"

#include <stdexcept>
#include <string>

namespace tensorreg {

namespace {

// Sizes of the index blocks below, at, and above mode d.
struct ModeSplit {
  Index left = 1, mid = 1, right = 1;
};

ModeSplit split_at(std::span<const Index> dims, Index d) {
  ModeSplit s;
  for (Index k = 0; k < static_cast<Index>(dims.size()); ++k) {
    if (k < d)
      s.left *= dims[static_cast<std::size_t>(k)];
    else if (k == d)
      s.mid = dims[static_cast<std::size_t>(k)];
    else
      s.right *= dims[static_cast<std::size_t>(k)];
  }
  return s;
}

void check_mode(const DenseTensor& t, Index d, const char* op) {
  if (d < 0 || d >= t.order())
    throw std::invalid_argument(std::string(op) + ": mode " + std::to_string(d) +
                                " out of range for order " + std::to_string(t.order()));
}

}  // namespace

Index checked_cell_count(std::span<const Index> dims) {
  if (dims.empty()) throw std::invalid_argument("tensor must have at least one mode");
  Index n = 1;
  for (Index p : dims) {
    if (p <= 0) throw std::invalid_argument("tensor dimensions must be positive");
    if (n > (Index{1} << 31) / p)
      throw std::invalid_argument("tensor cell count exceeds 2^31");
    n *= p;
  }
  return n;
}

DenseTensor::DenseTensor(std::vector<Index> dims) : dims_(std::move(dims)) {
  data_ = Vector::Zero(checked_cell_count(dims_));
}

DenseTensor::DenseTensor(std::vector<Index> dims, Vector data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (checked_cell_count(dims_) != data_.size())
    throw std::invalid_argument("tensor data length does not match dimensions");
}

Index DenseTensor::offset(std::span<const Index> idx) const {
  Index off = 0, stride = 1;
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    off += idx[d] * stride;
    stride *= dims_[d];
  }
  return off;
}

Matrix matricize(const DenseTensor& t, Index d) {
  check_mode(t, d, "matricize");
  const auto s = split_at(t.dims(), d);
  Matrix out(s.mid, s.left * s.right);
  const double* src = t.data().data();
  for (Index r = 0; r < s.right; ++r) {
    // The slice at fixed trailing index r is a contiguous left x mid block.
    Eigen::Map<const Matrix> slice(src + r * s.left * s.mid, s.left, s.mid);
    out.middleCols(r * s.left, s.left) = slice.transpose();
  }
  return out;
}

Matrix matricize_pair(const DenseTensor& t, Index d, Index dp) {
  check_mode(t, d, "matricize_pair");
  check_mode(t, dp, "matricize_pair");
  if (d == dp) throw std::invalid_argument("matricize_pair: modes must differ");

  const auto& dims = t.dims();
  const Index D = t.order();
  const Index pd = t.dim(d), pdp = t.dim(dp);
  Matrix out(pd * pdp, t.size() / (pd * pdp));

  std::vector<Index> idx(static_cast<std::size_t>(D), 0);
  const double* src = t.data().data();
  for (Index lin = 0; lin < t.size(); ++lin) {
    const Index row = idx[static_cast<std::size_t>(d)] + idx[static_cast<std::size_t>(dp)] * pd;
    Index col = 0, stride = 1;
    for (Index k = 0; k < D; ++k) {
      if (k == d || k == dp) continue;
      col += idx[static_cast<std::size_t>(k)] * stride;
      stride *= dims[static_cast<std::size_t>(k)];
    }
    out(row, col) = src[lin];
    for (Index k = 0; k < D; ++k) {
      if (++idx[static_cast<std::size_t>(k)] < dims[static_cast<std::size_t>(k)]) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return out;
}

DenseTensor mode_multiply(const DenseTensor& t, Index d, const Matrix& u) {
  check_mode(t, d, "mode_multiply");
  if (u.cols() != t.dim(d))
    throw std::invalid_argument("mode_multiply: matrix has " + std::to_string(u.cols()) +
                                " columns, mode " + std::to_string(d) + " has size " +
                                std::to_string(t.dim(d)));
  const auto s = split_at(t.dims(), d);
  std::vector<Index> out_dims = t.dims();
  out_dims[static_cast<std::size_t>(d)] = u.rows();
  DenseTensor out(out_dims);

  const double* src = t.data().data();
  double* dst = out.data().data();
  if (s.left == 1) {
    // Whole tensor viewed as mid x right: one GEMM.
    Eigen::Map<const Matrix> in(src, s.mid, s.right);
    Eigen::Map<Matrix> o(dst, u.rows(), s.right);
    o.noalias() = u * in;
  } else if (s.right == 1) {
    Eigen::Map<const Matrix> in(src, s.left, s.mid);
    Eigen::Map<Matrix> o(dst, s.left, u.rows());
    o.noalias() = in * u.transpose();
  } else {
    for (Index r = 0; r < s.right; ++r) {
      Eigen::Map<const Matrix> in(src + r * s.left * s.mid, s.left, s.mid);
      Eigen::Map<Matrix> o(dst + r * s.left * u.rows(), s.left, u.rows());
      o.noalias() = in * u.transpose();
    }
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

DenseTensor outer(std::span<const Vector> vs) {
  if (vs.empty()) throw std::invalid_argument("outer: need at least one vector");
  std::vector<Index> dims;
  dims.reserve(vs.size());
  for (const Vector& v : vs) {
    if (v.size() == 0) throw std::invalid_argument("outer: vectors must be nonempty");
    dims.push_back(v.size());
  }
  // vec(outer(v_0,...,v_{D-1})) = v_{D-1} (x) ... (x) v_0.
  Vector acc = vs[0];
  for (std::size_t d = 1; d < vs.size(); ++d) {
    Vector next(acc.size() * vs[d].size());
    for (Index j = 0; j < vs[d].size(); ++j) next.segment(j * acc.size(), acc.size()) = vs[d][j] * acc;
    acc = std::move(next);
  }
  return DenseTensor(std::move(dims), std::move(acc));
}

DenseTensor outer(std::initializer_list<Vector> vs) {
  std::vector<Vector> tmp(vs);
  return outer(std::span<const Vector>(tmp.data(), tmp.size()));
}

double inner(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("inner: dimension mismatch");
  return a.data().dot(b.data());
}

std::vector<Index> mode_permutation(std::span<const Index> dims, Index d) {
  if (d < 0 || d >= static_cast<Index>(dims.size()))
    throw std::invalid_argument("mode_permutation: mode out of range");
  const Index n = checked_cell_count(dims);
  const auto s = split_at(dims, d);
  std::vector<Index> pi(static_cast<std::size_t>(n));
  // vec(B_(d)) position is m + (l + r*left)*mid; source position is
  // l + m*left + r*left*mid.
  for (Index r = 0; r < s.right; ++r)
    for (Index l = 0; l < s.left; ++l)
      for (Index m = 0; m < s.mid; ++m)
        pi[static_cast<std::size_t>(m + (l + r * s.left) * s.mid)] =
            l + m * s.left + r * s.left * s.mid;
  return pi;
}

}  // namespace tensorreg
