#include "tensorreg/downsize.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tensorreg {

namespace {

Index next_pow2(Index p) {
  Index l = 1;
  while (l < p) l *= 2;
  return l;
}

// One periodized synthesis step: coefficients (approx a, detail d) of length
// m are mapped to a signal of length 2m. This is the adjoint of the analysis
// step x -> a[k] = sum_j h[j] x[(2k+j) mod 2m], so the full multi-level
// transform is orthogonal for any dyadic length.
Vector synthesis_step(const Vector& a, const Vector& d, const std::vector<double>& h,
                      const std::vector<double>& g) {
  const Index m = a.size();
  Vector x = Vector::Zero(2 * m);
  for (Index k = 0; k < m; ++k) {
    for (std::size_t j = 0; j < h.size(); ++j) {
      const Index i = (2 * k + static_cast<Index>(j)) % (2 * m);
      x[i] += h[j] * a[k] + g[j] * d[k];
    }
  }
  return x;
}

// Column k of the full L x L orthogonal wavelet matrix: the synthesis of the
// k-th unit coefficient vector, with coefficients ordered coarsest first:
// [approx | detail level 1 (len 1) | detail level 2 (len 2) | ... | len L/2].
Matrix wavelet_matrix(Index l, const std::vector<double>& h, const std::vector<double>& g) {
  Matrix w(l, l);
  for (Index k = 0; k < l; ++k) {
    // Split the coefficient index into (detail level length, position).
    Index lev_len = 1, pos = k - 1;
    if (k > 0) {
      while (pos >= lev_len) {
        pos -= lev_len;
        lev_len *= 2;
      }
    }
    // Synthesize from the coarsest level upward, injecting the unit
    // coefficient at its level.
    Vector cur(1);
    cur[0] = k == 0 ? 1.0 : 0.0;
    Index len = 1;
    while (len < l) {
      Vector det = Vector::Zero(len);
      if (k > 0 && len == lev_len) det[pos] = 1.0;
      cur = synthesis_step(cur, det, h, g);
      len *= 2;
    }
    if (l == 1) cur[0] = k == 0 ? 1.0 : 0.0;
    w.col(k) = cur;
  }
  return w;
}

void filters(BasisKind kind, std::vector<double>& h, std::vector<double>& g) {
  if (kind == BasisKind::haar_d2) {
    const double s = 1.0 / std::sqrt(2.0);
    h = {s, s};
    g = {s, -s};
  } else {
    const double r3 = std::sqrt(3.0);
    const double c = 4.0 * std::sqrt(2.0);
    h = {(1.0 + r3) / c, (3.0 + r3) / c, (3.0 - r3) / c, (1.0 - r3) / c};
    g.resize(4);
    for (int k = 0; k < 4; ++k) g[static_cast<std::size_t>(k)] = (k % 2 == 0 ? 1.0 : -1.0) * h[static_cast<std::size_t>(3 - k)];
  }
}

}  // namespace

void BasisSpec::validate() const {
  if (p < 1) throw std::invalid_argument("basis: p must be positive");
  if (p_tilde < 1 || p_tilde > p)
    throw std::invalid_argument("basis: p_tilde must lie in [1, p]");
  if (kind == BasisKind::custom && (custom.rows() != p || custom.cols() != p_tilde))
    throw std::invalid_argument("basis: custom matrix must be p x p_tilde");
}

Matrix build_basis(const BasisSpec& s) {
  s.validate();
  switch (s.kind) {
    case BasisKind::identity:
      return Matrix::Identity(s.p, s.p).leftCols(s.p_tilde);
    case BasisKind::custom:
      return s.custom;
    case BasisKind::haar_d2:
    case BasisKind::daubechies_d4: {
      std::vector<double> h, g;
      filters(s.kind, h, g);
      const Index l = next_pow2(s.p);
      const Matrix w = wavelet_matrix(l, h, g);
      if (s.p == l) return w.leftCols(s.p_tilde);  // already orthonormal
      // Non-dyadic p: truncate the rows, walk the columns coarsest first and
      // Gram-Schmidt each against the ones already kept. Columns whose
      // support fell entirely into the cut rows (or that became dependent)
      // are skipped, so the kept columns stay orthonormal and coarse-to-fine.
      Matrix q(s.p, s.p_tilde);
      Index kept = 0;
      for (Index col = 0; col < l && kept < s.p_tilde; ++col) {
        Vector v = w.col(col).head(s.p);
        for (int pass = 0; pass < 2; ++pass)
          for (Index j = 0; j < kept; ++j) v -= q.col(j).dot(v) * q.col(j);
        const double nrm = v.norm();
        if (nrm < 1e-8) continue;
        q.col(kept++) = v / nrm;
      }
      if (kept < s.p_tilde)
        throw std::invalid_argument(
            "build_basis: only " + std::to_string(kept) +
            " independent truncated wavelet columns available for p=" + std::to_string(s.p) +
            ", p_tilde=" + std::to_string(s.p_tilde));
      return q;
    }
  }
  throw std::logic_error("build_basis: unknown kind");
}

DenseTensor downsize_tensor(const DenseTensor& x, const std::vector<BasisSpec>& bases) {
  if (static_cast<Index>(bases.size()) != x.order())
    throw std::invalid_argument("downsize_tensor: need one basis per mode");
  DenseTensor t = x;
  for (Index d = 0; d < x.order(); ++d) {
    const BasisSpec& s = bases[static_cast<std::size_t>(d)];
    if (s.p != x.dim(d))
      throw std::invalid_argument("downsize_tensor: basis " + std::to_string(d) +
                                  " expects p=" + std::to_string(s.p) + ", mode has " +
                                  std::to_string(x.dim(d)));
    t = mode_multiply(t, d, build_basis(s).transpose());
  }
  return t;
}

Dataset downsize_dataset(const Dataset& ds, const std::vector<BasisSpec>& bases) {
  ds.validate();
  Dataset out;
  out.y = ds.y;
  out.z = ds.z;
  // Build each basis once.
  std::vector<Matrix> bt;
  const auto dims = ds.xdims();
  if (bases.size() != dims.size())
    throw std::invalid_argument("downsize_dataset: need one basis per mode");
  for (std::size_t d = 0; d < bases.size(); ++d) {
    if (bases[d].p != dims[d])
      throw std::invalid_argument("downsize_dataset: basis " + std::to_string(d) +
                                  " does not match covariate mode size");
    bt.push_back(build_basis(bases[d]).transpose());
  }
  out.x.reserve(ds.x.size());
  for (const DenseTensor& x : ds.x) {
    DenseTensor t = x;
    for (Index d = 0; d < t.order(); ++d) t = mode_multiply(t, d, bt[static_cast<std::size_t>(d)]);
    out.x.push_back(std::move(t));
  }
  return out;
}

}  // namespace tensorreg
