#include "tensorreg/inference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tensorreg {

namespace {

struct Layout {
  Index core_size = 1;
  Index total = 0;
  std::vector<Index> factor_offset;  // offset of each vec B_d block
};

Layout layout_of(const TuckerCoeff& c) {
  Layout lo;
  for (Index d = 0; d < c.order(); ++d) lo.core_size *= c.core.dim(d);
  Index off = lo.core_size;
  for (Index d = 0; d < c.order(); ++d) {
    lo.factor_offset.push_back(off);
    off += c.factors[static_cast<std::size_t>(d)].size();
  }
  lo.total = off;
  return lo;
}

DenseTensor ttm_except(const DenseTensor& x, const std::vector<Matrix>& factors, Index skip_a,
                       Index skip_b = -1) {
  DenseTensor t = x;
  for (Index d = 0; d < static_cast<Index>(factors.size()); ++d) {
    if (d == skip_a || d == skip_b) continue;
    t = mode_multiply(t, d, factors[static_cast<std::size_t>(d)].transpose());
  }
  return t;
}

// Per-observation GLM weights: u = (y-mu) mu'/sigma^2, w = (mu')^2/sigma^2.
void glm_weights(const GlmFamily& f, const Vector& y, const Vector& eta, Vector& u, Vector& w) {
  FamilyEval ev = family_eval(f, eta);
  const Index n = y.size();
  u.resize(n);
  w.resize(n);
  for (Index i = 0; i < n; ++i) {
    u[i] = (y[i] - ev.mu[i]) * ev.mu_prime[i] / ev.variance[i];
    w[i] = ev.mu_prime[i] * ev.mu_prime[i] / ev.variance[i];
  }
}

}  // namespace

std::vector<Index> restricted_index_map(std::span<const Index> dims,
                                        std::span<const Index> ranks) {
  if (dims.size() != ranks.size())
    throw std::invalid_argument("restricted_index_map: dims/ranks mismatch");
  Index core = 1;
  for (Index r : ranks) core *= r;
  std::vector<Index> keep;
  for (Index k = 0; k < core; ++k) keep.push_back(k);
  Index off = core;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    for (Index r = 0; r < ranks[d]; ++r)
      for (Index i = 0; i < dims[d]; ++i)
        if (i >= ranks[d]) keep.push_back(off + i + r * dims[d]);
    off += dims[d] * ranks[d];
  }
  return keep;
}

Vector eta_gradient(const DenseTensor& x, const TuckerCoeff& coeff) {
  coeff.validate();
  if (x.dims() != coeff.dims())
    throw std::invalid_argument("eta_gradient: covariate dimensions do not match coefficient");
  const Layout lo = layout_of(coeff);
  Vector g(lo.total);

  DenseTensor xt = ttm_except(x, coeff.factors, -1);
  g.head(lo.core_size) = vec(xt);

  for (Index d = 0; d < coeff.order(); ++d) {
    DenseTensor xd = ttm_except(x, coeff.factors, d);
    Matrix m = matricize(xd, d) * matricize(coeff.core, d).transpose();  // p_d x R_d
    g.segment(lo.factor_offset[static_cast<std::size_t>(d)], m.size()) =
        Eigen::Map<const Vector>(m.data(), m.size());
  }
  return g;
}

Matrix eta_hessian(const DenseTensor& x, const TuckerCoeff& coeff) {
  coeff.validate();
  if (x.dims() != coeff.dims())
    throw std::invalid_argument("eta_hessian: covariate dimensions do not match coefficient");
  const Layout lo = layout_of(coeff);
  const Index D = coeff.order();
  Matrix h = Matrix::Zero(lo.total, lo.total);
  const auto& ranks = coeff.core.dims();

  // G-B_d blocks, entries 1_{r_d = s_d} * M_d(i_d, col(r_{-d})) with
  // M_d = (X x_{d' != d} B_{d'}^T)_(d).
  for (Index d = 0; d < D; ++d) {
    const Matrix md = matricize(ttm_except(x, coeff.factors, d), d);
    const Index pd = coeff.factors[static_cast<std::size_t>(d)].rows();
    const Index off = lo.factor_offset[static_cast<std::size_t>(d)];
    std::vector<Index> rvec(static_cast<std::size_t>(D), 0);
    for (Index k = 0; k < lo.core_size; ++k) {
      Index col = 0, stride = 1;
      for (Index dd = 0; dd < D; ++dd) {
        if (dd == d) continue;
        col += rvec[static_cast<std::size_t>(dd)] * stride;
        stride *= ranks[static_cast<std::size_t>(dd)];
      }
      const Index rd = rvec[static_cast<std::size_t>(d)];
      for (Index i = 0; i < pd; ++i) {
        const double v = md(i, col);
        h(k, off + i + rd * pd) = v;
        h(off + i + rd * pd, k) = v;
      }
      for (Index dd = 0; dd < D; ++dd) {
        if (++rvec[static_cast<std::size_t>(dd)] < ranks[static_cast<std::size_t>(dd)]) break;
        rvec[static_cast<std::size_t>(dd)] = 0;
      }
    }
  }

  // B_d-B_{d'} blocks from the mode-(d,d') matricizations.
  for (Index d = 0; d < D; ++d) {
    for (Index dp = d + 1; dp < D; ++dp) {
      const DenseTensor xdd = ttm_except(x, coeff.factors, d, dp);
      const Matrix n_mat =
          matricize_pair(xdd, d, dp) * matricize_pair(coeff.core, d, dp).transpose();
      const Index pd = coeff.factors[static_cast<std::size_t>(d)].rows();
      const Index pdp = coeff.factors[static_cast<std::size_t>(dp)].rows();
      const Index rd = ranks[static_cast<std::size_t>(d)];
      const Index rdp = ranks[static_cast<std::size_t>(dp)];
      const Index offd = lo.factor_offset[static_cast<std::size_t>(d)];
      const Index offdp = lo.factor_offset[static_cast<std::size_t>(dp)];
      for (Index sdp = 0; sdp < rdp; ++sdp)
        for (Index sd = 0; sd < rd; ++sd)
          for (Index idp = 0; idp < pdp; ++idp)
            for (Index id = 0; id < pd; ++id) {
              const double v = n_mat(id + idp * pd, sd + sdp * rd);
              h(offd + id + sd * pd, offdp + idp + sdp * pdp) = v;
              h(offdp + idp + sdp * pdp, offd + id + sd * pd) = v;
            }
    }
  }
  return h;
}

ScoreInfo score_and_info(const Dataset& ds, const TuckerCoeff& coeff, const GlmFamily& f,
                         bool restricted) {
  ds.validate();
  coeff.validate();
  const Layout lo = layout_of(coeff);
  const Index n = ds.n();

  std::vector<Index> keep;
  if (restricted) keep = restricted_index_map(coeff.dims(), coeff.ranks());
  const Index p = restricted ? static_cast<Index>(keep.size()) : lo.total;

  // eta_i = <B, X_i> (+ z_i . gamma): the core block of the gradient dotted
  // with vec G, the offset added separately.
  const Vector vg = vec(coeff.core);
  Vector offz = ds.has_z() ? Vector(ds.z * coeff.gamma) : Vector();

  Matrix grads(lo.total, n);
  Vector eta(n);
  for (Index i = 0; i < n; ++i) {
    grads.col(i) = eta_gradient(ds.x[static_cast<std::size_t>(i)], coeff);
    eta[i] = grads.col(i).head(lo.core_size).dot(vg) + (offz.size() ? offz[i] : 0.0);
  }
  Vector u, w;
  glm_weights(f, ds.y, eta, u, w);

  ScoreInfo si;
  si.restricted = restricted;
  si.score = Vector::Zero(p);
  si.info = Matrix::Zero(p, p);
  Vector gf(p);
  for (Index i = 0; i < n; ++i) {
    if (restricted) {
      for (Index k = 0; k < p; ++k) gf[k] = grads(keep[static_cast<std::size_t>(k)], i);
    } else {
      gf = grads.col(i);
    }
    si.score.noalias() += u[i] * gf;
    si.info.noalias() += w[i] * (gf * gf.transpose());
  }
  si.info = 0.5 * (si.info + si.info.transpose());
  return si;
}

Matrix observed_hessian(const Dataset& ds, const TuckerCoeff& coeff, const GlmFamily& f) {
  ds.validate();
  coeff.validate();
  const Layout lo = layout_of(coeff);
  const Index n = ds.n();
  const Vector vg = vec(coeff.core);
  Vector offz = ds.has_z() ? Vector(ds.z * coeff.gamma) : Vector();

  Matrix h = Matrix::Zero(lo.total, lo.total);
  Vector eta(n);
  Matrix grads(lo.total, n);
  for (Index i = 0; i < n; ++i) {
    grads.col(i) = eta_gradient(ds.x[static_cast<std::size_t>(i)], coeff);
    eta[i] = grads.col(i).head(lo.core_size).dot(vg) + (offz.size() ? offz[i] : 0.0);
  }
  Vector u, w;
  glm_weights(f, ds.y, eta, u, w);
  for (Index i = 0; i < n; ++i) {
    h.noalias() -= w[i] * (grads.col(i) * grads.col(i).transpose());
    h.noalias() += u[i] * eta_hessian(ds.x[static_cast<std::size_t>(i)], coeff);
  }
  return h;
}

IdentifiabilityReport local_identifiability(const Dataset& ds, const TuckerCoeff& coeff,
                                            const GlmFamily& f) {
  const ScoreInfo si = score_and_info(ds, coeff, f, true);
  Eigen::BDCSVD<Matrix> svd(si.info);
  const Vector& s = svd.singularValues();
  const double tol = static_cast<double>(si.info.rows()) *
                     std::numeric_limits<double>::epsilon() * (s.size() ? s[0] : 0.0);
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > tol) ++rank;
  IdentifiabilityReport rep;
  rep.rank = rank;
  rep.deficiency = si.info.rows() - rank;
  rep.identifiable = rep.deficiency == 0;
  return rep;
}

Vector standard_errors(const ScoreInfo& si) {
  const Index p = si.info.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(si.info);
  const Vector& ev = es.eigenvalues();
  const double tol = static_cast<double>(p) * std::numeric_limits<double>::epsilon() *
                     std::max(std::abs(ev[0]), std::abs(ev[p - 1]));
  if (ev[0] <= tol)
    throw std::runtime_error(
        "standard_errors: information matrix is singular; run local_identifiability");
  const Matrix cov =
      es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return cov.diagonal().cwiseSqrt();
}

}  // namespace tensorreg
