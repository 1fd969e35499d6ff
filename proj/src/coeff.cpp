#include "tensorreg/coeff.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tensorreg {

std::vector<Index> TuckerCoeff::dims() const {
  std::vector<Index> p;
  p.reserve(factors.size());
  for (const Matrix& b : factors) p.push_back(b.rows());
  return p;
}

void TuckerCoeff::validate() const {
  if (static_cast<Index>(factors.size()) != core.order())
    throw std::invalid_argument("TuckerCoeff: factor count does not match core order");
  for (Index d = 0; d < core.order(); ++d) {
    const Matrix& b = factors[static_cast<std::size_t>(d)];
    if (b.cols() != core.dim(d))
      throw std::invalid_argument("TuckerCoeff: factor " + std::to_string(d) +
                                  " has " + std::to_string(b.cols()) +
                                  " columns, core mode has size " + std::to_string(core.dim(d)));
    if (b.cols() < 1 || b.cols() > b.rows())
      throw std::invalid_argument("TuckerCoeff: rank of mode " + std::to_string(d) +
                                  " must lie in [1, p_d]");
  }
}

void CpCoeff::validate() const {
  if (factors.empty()) throw std::invalid_argument("CpCoeff: no factors");
  const Index r = factors[0].cols();
  if (r < 1) throw std::invalid_argument("CpCoeff: rank must be >= 1");
  for (const Matrix& b : factors)
    if (b.cols() != r) throw std::invalid_argument("CpCoeff: factors must share a column count");
}

DenseTensor tucker_reconstruct(const TuckerCoeff& c) {
  c.validate();
  DenseTensor b = c.core;
  for (Index d = 0; d < c.order(); ++d)
    b = mode_multiply(b, d, c.factors[static_cast<std::size_t>(d)]);
  return b;
}

DenseTensor cp_reconstruct(const CpCoeff& c) {
  c.validate();
  std::vector<Index> dims;
  for (const Matrix& b : c.factors) dims.push_back(b.rows());
  DenseTensor out(dims);
  std::vector<Vector> cols(c.factors.size());
  for (Index r = 0; r < c.rank(); ++r) {
    for (std::size_t d = 0; d < c.factors.size(); ++d) cols[d] = c.factors[d].col(r);
    out.data() += outer(std::span<const Vector>(cols.data(), cols.size())).data();
  }
  return out;
}

TuckerCoeff cp_to_tucker(const CpCoeff& c) {
  c.validate();
  const Index r = c.rank();
  const Index d = static_cast<Index>(c.factors.size());
  DenseTensor core(std::vector<Index>(static_cast<std::size_t>(d), r));
  Index stride = 0;  // superdiagonal step: 1 + R + R^2 + ...
  Index step = 1;
  for (Index k = 0; k < d; ++k) {
    stride += step;
    step *= r;
  }
  for (Index i = 0; i < r; ++i) core[i * stride] = 1.0;
  return TuckerCoeff{std::move(core), c.factors, c.gamma};
}

ModelSize tucker_df(std::span<const Index> dims, std::span<const Index> ranks) {
  if (dims.size() != ranks.size())
    throw std::invalid_argument("tucker_df: dims and ranks must have equal length");
  Index lin = 0, core = 1, adj = 0;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    if (ranks[d] < 1 || ranks[d] > dims[d])
      throw std::invalid_argument("tucker_df: rank of mode " + std::to_string(d) +
                                  " must lie in [1, p_d]");
    lin += dims[d] * ranks[d];
    core *= ranks[d];
    adj += ranks[d] * ranks[d];
  }
  return ModelSize{lin + core - adj, lin + core};
}

ModelSize cp_df(std::span<const Index> dims, Index rank) {
  if (rank < 1) throw std::invalid_argument("cp_df: rank must be >= 1");
  const Index d = static_cast<Index>(dims.size());
  Index psum = 0;
  for (Index p : dims) psum += p;
  const Index raw = rank * psum;
  if (d == 2) return ModelSize{rank * psum - rank * rank, raw};
  return ModelSize{rank * (psum - d + 1), raw};
}

Index df_gap(Index rank, Index order) {
  if (rank < 1 || order < 2) throw std::invalid_argument("df_gap: need R >= 1, D >= 2");
  if (order == 2) return 0;
  Index pow = 1;
  for (Index k = 0; k < order - 1; ++k) pow *= rank;
  return rank * (pow - order * rank + order - 1);
}

double bic(double loglik, Index n, Index df) {
  if (n < 1) throw std::invalid_argument("bic: n must be >= 1");
  return -2.0 * loglik + std::log(static_cast<double>(n)) * static_cast<double>(df);
}

}  // namespace tensorreg
