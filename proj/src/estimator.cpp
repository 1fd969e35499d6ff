#include "tensorreg/estimator.hpp"

#include "estimator_detail.hpp"
#include "tensorreg/parallel.hpp"
#include "tensorreg/regularization.hpp"
#include "tensorreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tensorreg {

std::vector<Index> Dataset::xdims() const {
  if (x.empty()) throw std::invalid_argument("Dataset: no tensor covariates");
  return x[0].dims();
}

void Dataset::validate() const {
  const Index nn = y.size();
  if (static_cast<Index>(x.size()) != nn)
    throw std::invalid_argument("Dataset: y has " + std::to_string(nn) + " rows but " +
                                std::to_string(x.size()) + " tensor covariates");
  if (nn < 1) throw std::invalid_argument("Dataset: empty");
  const auto dims = x[0].dims();
  for (const DenseTensor& t : x)
    if (t.dims() != dims) throw std::invalid_argument("Dataset: covariate dimensions differ");
  if (z.rows() != 0 && z.rows() != nn)
    throw std::invalid_argument("Dataset: z row count does not match y");
}

namespace detail {

Stacked stack(const Dataset& ds) {
  Stacked st;
  st.n = ds.n();
  st.xdims = ds.xdims();
  std::vector<Index> dims = st.xdims;
  dims.push_back(st.n);
  st.t = DenseTensor(dims);
  const Index m = ds.x[0].size();
  for (Index i = 0; i < st.n; ++i)
    st.t.data().segment(i * m, m) = ds.x[static_cast<std::size_t>(i)].data();
  return st;
}

// Multiplies every tensor mode (not the trailing observation mode) by the
// transposed factor, skipping mode `skip` (-1 skips nothing).
DenseTensor ttm_factors_t(const DenseTensor& stacked, const std::vector<Matrix>& factors,
                          Index skip) {
  DenseTensor t = stacked;
  for (Index d = 0; d < static_cast<Index>(factors.size()); ++d) {
    if (d == skip) continue;
    t = mode_multiply(t, d, factors[static_cast<std::size_t>(d)].transpose());
  }
  return t;
}

Matrix core_design(const Stacked& st, const std::vector<Matrix>& factors) {
  DenseTensor t = ttm_factors_t(st.t, factors, -1);
  const Index k = t.size() / st.n;
  return Eigen::Map<const Matrix>(t.data().data(), k, st.n).transpose();
}

Matrix factor_design(const Stacked& st, const TuckerCoeff& coeff, Index d) {
  const Index D = static_cast<Index>(coeff.factors.size());
  if (d < 0 || d >= D) throw std::invalid_argument("design_for_factor: mode out of range");
  DenseTensor t = ttm_factors_t(st.t, coeff.factors, d);

  // Per-observation slices are contiguous; matricize each at mode d and
  // multiply by G_(d)^T.
  Index left = 1, right = 1;
  const Index pd = st.xdims[static_cast<std::size_t>(d)];
  for (Index k = 0; k < D; ++k) {
    const Index sz = t.dim(k);
    if (k < d) left *= sz;
    if (k > d) right *= sz;
  }
  const Matrix gd_t = matricize(coeff.core, d).transpose();  // (prod R_-d) x R_d
  const Index rd = gd_t.cols();
  const Index m = left * pd * right;

  Matrix design(st.n, pd * rd);
  Matrix xd(pd, left * right);
  for (Index i = 0; i < st.n; ++i) {
    const double* src = t.data().data() + i * m;
    for (Index r = 0; r < right; ++r) {
      Eigen::Map<const Matrix> slice(src + r * left * pd, left, pd);
      xd.middleCols(r * left, left) = slice.transpose();
    }
    Matrix mi = xd * gd_t;
    design.row(i) = Eigen::Map<const Vector>(mi.data(), pd * rd);
  }
  return design;
}

namespace {

double core_penalty(const PenaltySpec* pen, const DenseTensor& core) {
  if (!pen) return 0.0;
  double s = 0.0;
  for (Index i = 0; i < core.size(); ++i) s += penalty_value(*pen, core[i]);
  return s;
}

// Scales core mode-d slices: entry with mode-d index r is multiplied by s[r].
void scale_core_mode(DenseTensor& core, Index d, const Vector& s) {
  Index left = 1, right = 1;
  const Index mid = core.dim(d);
  for (Index k = 0; k < core.order(); ++k) {
    if (k < d) left *= core.dim(k);
    if (k > d) right *= core.dim(k);
  }
  double* p = core.data().data();
  for (Index r = 0; r < right; ++r)
    for (Index m = 0; m < mid; ++m) {
      const double f = s[m];
      if (f == 1.0) continue;
      Eigen::Map<Vector>(p + (r * mid + m) * left, left) *= f;
    }
}

// GLM update of one coefficient block with zero design columns frozen in
// place (they carry no information; the penalized path produces them when
// core slices are zeroed out).
Vector block_glm_update(const Matrix& design, const Vector& y, const GlmFamily& fam,
                        const Vector& offset, const Vector& current, const char* block_name) {
  const Index q = design.cols();
  std::vector<Index> free_cols;
  free_cols.reserve(static_cast<std::size_t>(q));
  double max_norm = 0.0;
  Vector col_norms(q);
  for (Index j = 0; j < q; ++j) {
    col_norms[j] = design.col(j).norm();
    max_norm = std::max(max_norm, col_norms[j]);
  }
  for (Index j = 0; j < q; ++j)
    if (col_norms[j] > 1e-13 * max_norm && col_norms[j] > 0.0) free_cols.push_back(j);

  try {
    if (static_cast<Index>(free_cols.size()) == q) {
      GlmFit fit = irls_fit(design, y, fam, offset, 50, 1e-12, current);
      return fit.coef;
    }
    if (free_cols.empty()) return current;
    Matrix sub(design.rows(), static_cast<Index>(free_cols.size()));
    Vector warm(static_cast<Index>(free_cols.size()));
    for (std::size_t k = 0; k < free_cols.size(); ++k) {
      sub.col(static_cast<Index>(k)) = design.col(free_cols[k]);
      warm[static_cast<Index>(k)] = current[free_cols[k]];
    }
    GlmFit fit = irls_fit(sub, y, fam, offset, 50, 1e-12, warm);
    Vector out = current;
    for (std::size_t k = 0; k < free_cols.size(); ++k) out[free_cols[k]] = fit.coef[static_cast<Index>(k)];
    return out;
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " in " + block_name);
  }
}

}  // namespace

EngineOutcome run_block_relaxation(const Stacked& st, const Dataset& ds, const FitOptions& opts,
                                   TuckerCoeff coeff, const EngineConfig& cfg) {
  const Index D = static_cast<Index>(coeff.factors.size());
  const GlmFamily& fam = opts.family;
  const Vector& y = ds.y;
  const double slack = 1e-10;

  EngineOutcome out;
  Vector offz = ds.has_z() ? Vector(ds.z * coeff.gamma) : Vector::Zero(ds.n());

  // In the penalized path factor columns are kept at unit norm, with the
  // scales absorbed into the core.
  if (cfg.penalty) {
    for (Index d = 0; d < D; ++d) {
      Matrix& b = coeff.factors[static_cast<std::size_t>(d)];
      Vector s(b.cols());
      for (Index r = 0; r < b.cols(); ++r) {
        const double nrm = b.col(r).norm();
        s[r] = nrm > 1e-300 ? nrm : 1.0;
        b.col(r) /= s[r];
      }
      scale_core_mode(coeff.core, d, s);
    }
  }

  Matrix xg = core_design(st, coeff.factors);
  Vector vg = vec(coeff.core);
  double ll = loglik(fam, y, xg * vg + offz);
  double obj = ll - core_penalty(cfg.penalty, coeff.core);
  out.trace.push_back(obj);
  out.block_trace.push_back(obj);

  for (int cycle = 1; cycle <= opts.max_iter; ++cycle) {
    const double obj_cycle_start = obj;

    for (Index d = 0; d < D; ++d) {
      Matrix xd = factor_design(st, coeff, d);
      Matrix& bd = coeff.factors[static_cast<std::size_t>(d)];
      const Vector cur = Eigen::Map<const Vector>(bd.data(), bd.size());
      const std::string name = "factor block d=" + std::to_string(d);
      Vector upd = block_glm_update(xd, y, fam, offz, cur, name.c_str());

      if (!cfg.penalty) {
        bd = Eigen::Map<const Matrix>(upd.data(), bd.rows(), bd.cols());
        ll = loglik(fam, y, xd * upd + offz);
        obj = ll;
      } else {
        // Normalize columns, absorb the scales into the core, and step-halve
        // if the penalized objective would drop (the absorption changes the
        // penalty term).
        const DenseTensor core_prev = coeff.core;
        const Vector prev = cur;
        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h < 40 && !accepted; ++h, step *= 0.5) {
          Vector trial = prev + step * (upd - prev);
          Eigen::Map<const Matrix> bt(trial.data(), bd.rows(), bd.cols());
          Vector s(bd.cols());
          Matrix bnew = bt;
          for (Index r = 0; r < bd.cols(); ++r) {
            const double nrm = bnew.col(r).norm();
            s[r] = nrm > 1e-300 ? nrm : 1.0;
            bnew.col(r) /= s[r];
          }
          DenseTensor core_try = core_prev;
          scale_core_mode(core_try, d, s);
          const double ll_try = loglik(fam, y, xd * trial + offz);
          const double obj_try = ll_try - core_penalty(cfg.penalty, core_try);
          if (std::isfinite(obj_try) && obj_try >= obj - slack * (1.0 + std::abs(obj))) {
            bd = bnew;
            coeff.core = std::move(core_try);
            ll = ll_try;
            obj = obj_try;
            accepted = true;
          }
        }
        // Fallback: keep the previous state exactly.
      }
      out.block_trace.push_back(obj);
    }

    xg = core_design(st, coeff.factors);
    vg = vec(coeff.core);
    if (cfg.update_core) {
      if (!cfg.penalty) {
        Vector upd = block_glm_update(xg, y, fam, offz, vg, "core block");
        coeff.core.data() = upd;
        vg = upd;
        ll = loglik(fam, y, xg * vg + offz);
        obj = ll;
      } else {
        // One cyclic coordinate-descent sweep on the penalized quadratic
        // approximation, then a safeguard against the exact objective.
        Vector eta = xg * vg + offz;
        FamilyEval ev = family_eval(fam, eta);
        const Index n = ds.n();
        Vector w(n), rho(n);
        for (Index i = 0; i < n; ++i) {
          double mp = ev.mu_prime[i];
          if (fam.kind != Family::normal) mp = std::max(mp, 1e-10);
          w[i] = mp * mp / std::max(ev.variance[i], 1e-300);
          rho[i] = (y[i] - ev.mu[i]) / mp;
        }
        Vector g = vg;
        for (Index j = 0; j < g.size(); ++j) {
          const Vector wc = w.cwiseProduct(xg.col(j));
          const double a = wc.dot(xg.col(j));
          if (a < 1e-300) continue;
          const double zj = g[j] + wc.dot(rho) / a;
          const double gnew = threshold(*cfg.penalty, zj, a);
          if (gnew != g[j]) {
            rho -= xg.col(j) * (gnew - g[j]);
            g[j] = gnew;
          }
        }
        const Vector prev = vg;
        double step = 1.0;
        for (int h = 0; h < 40; ++h, step *= 0.5) {
          Vector trial = prev + step * (g - prev);
          DenseTensor core_try(coeff.core.dims(), trial);
          const double ll_try = loglik(fam, y, xg * trial + offz);
          const double obj_try = ll_try - core_penalty(cfg.penalty, core_try);
          if (std::isfinite(obj_try) && obj_try >= obj - slack * (1.0 + std::abs(obj))) {
            coeff.core = std::move(core_try);
            vg = trial;
            ll = ll_try;
            obj = obj_try;
            break;
          }
        }
      }
      out.block_trace.push_back(obj);
    }

    if (ds.has_z()) {
      const Vector eta_b = xg * vg;
      try {
        GlmFit fit = irls_fit(ds.z, y, fam, eta_b, 50, 1e-12, coeff.gamma);
        coeff.gamma = fit.coef;
        ll = fit.loglik;
        obj = ll - core_penalty(cfg.penalty, coeff.core);
      } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " in gamma block");
      }
      offz = ds.z * coeff.gamma;
      out.block_trace.push_back(obj);
    }

    out.trace.push_back(obj);
    if (obj - obj_cycle_start < opts.tol * (1.0 + std::abs(obj_cycle_start))) {
      out.converged = true;
      break;
    }
  }

  out.coeff = std::move(coeff);
  out.loglik = ll;
  out.objective = obj;
  return out;
}

TuckerCoeff random_start(const Dataset& ds, const FitOptions& opts, const Vector& gamma0,
                         int start_index) {
  RngStream rng = RngStream(opts.seed).substream("init", static_cast<std::uint64_t>(start_index));
  TuckerCoeff c;
  const auto dims = ds.xdims();
  c.core = DenseTensor(opts.ranks);
  for (Index i = 0; i < c.core.size(); ++i) c.core[i] = rng.normal();
  double cells = 1.0;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    Matrix b(dims[d], opts.ranks[d]);
    for (Index j = 0; j < b.size(); ++j) b.data()[j] = rng.normal();
    cells *= static_cast<double>(dims[d] * opts.ranks[d]);
    c.factors.push_back(std::move(b));
  }
  // Scale the core so the initial linear predictor has roughly unit
  // variance: E||B||_F^2 = prod(p_d R_d) for iid standard-normal entries,
  // and Var<B, X> = ||B||_F^2 under standard-normal covariates. Without the
  // rescale, bernoulli/poisson starts saturate and collapse the IRLS
  // weights.
  c.core.data() /= std::sqrt(cells);
  c.gamma = gamma0;
  return c;
}

Vector null_gamma(const Dataset& ds, const GlmFamily& fam) {
  if (!ds.has_z()) return Vector();
  GlmFit fit = irls_fit(ds.z, ds.y, fam, Vector(), 100, 1e-12);
  return fit.coef;
}

double profiled_loglik(const GlmFamily& fam, const Dataset& ds, double ll, double dev) {
  if (fam.kind != Family::normal) return ll;
  const double n = static_cast<double>(ds.n());
  const double phi_hat = std::max(dev / n, 1e-300);
  return -0.5 * n * (std::log(2.0 * std::numbers::pi * phi_hat) + 1.0);
}

FitResult finalize_fit(const Dataset& ds, const FitOptions& opts, EngineOutcome eo,
                       int best_start, Index cp_rank, bool do_canonicalize) {
  FitResult res;
  res.loglik_trace = std::move(eo.trace);
  res.block_trace = std::move(eo.block_trace);
  res.converged = eo.converged;
  res.best_start = best_start;
  res.cp_rank = cp_rank;

  const Matrix xg = design_for_core(ds, eo.coeff);
  Vector eta = xg * vec(eo.coeff.core);
  if (ds.has_z()) eta += ds.z * eo.coeff.gamma;
  res.deviance = deviance(opts.family, ds.y, eta);
  res.loglik = profiled_loglik(opts.family, ds, eo.loglik, res.deviance);

  const auto dims = ds.xdims();
  res.df = cp_rank >= 0 ? cp_df(dims, cp_rank).df
                        : tucker_df(dims, eo.coeff.ranks()).df;
  res.bic = bic(res.loglik, ds.n(), res.df + eo.coeff.gamma.size());
  res.coeff = do_canonicalize ? canonicalize(eo.coeff) : std::move(eo.coeff);
  return res;
}

// Best-of-starts driver shared by fit_tucker, fit_cp and select_order.
// extra_inits are appended after the random starts (select_order uses them
// for nested warm starts).
EngineOutcome best_of_starts(const Stacked& st, const Dataset& ds, const FitOptions& opts,
                             const EngineConfig& cfg,
                             const std::vector<TuckerCoeff>& extra_inits, int* best_start) {
  const Vector gamma0 = null_gamma(ds, opts.family);
  std::vector<TuckerCoeff> inits;
  if (opts.init) {
    inits.push_back(*opts.init);
    if (inits[0].gamma.size() == 0 && ds.has_z()) inits[0].gamma = gamma0;
  } else {
    for (int s = 0; s < std::max(1, opts.n_starts); ++s)
      inits.push_back(random_start(ds, opts, gamma0, s));
  }
  for (const TuckerCoeff& c : extra_inits) inits.push_back(c);

  std::vector<EngineOutcome> outs(inits.size());
  std::vector<std::string> errors(inits.size());
  parallel_for(static_cast<int>(inits.size()), opts.threads, [&](int i) {
    try {
      outs[static_cast<std::size_t>(i)] =
          run_block_relaxation(st, ds, opts, inits[static_cast<std::size_t>(i)], cfg);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
      outs[static_cast<std::size_t>(i)].objective = -std::numeric_limits<double>::infinity();
    }
  });

  int best = -1;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    if (best < 0 || outs[i].objective > outs[static_cast<std::size_t>(best)].objective + 1e-10)
      best = static_cast<int>(i);
  }
  if (best < 0 || !std::isfinite(outs[static_cast<std::size_t>(best)].objective)) {
    // Every start failed; surface the first error.
    for (const std::string& e : errors)
      if (!e.empty()) throw std::runtime_error(e);
    throw std::runtime_error("fit failed: no start produced a finite objective");
  }
  if (best_start) *best_start = best;
  return std::move(outs[static_cast<std::size_t>(best)]);
}

void check_ranks(const Dataset& ds, std::span<const Index> ranks) {
  const auto dims = ds.xdims();
  if (ranks.size() != dims.size())
    throw std::invalid_argument("ranks must have one entry per tensor mode");
  for (std::size_t d = 0; d < dims.size(); ++d)
    if (ranks[d] < 1 || ranks[d] > dims[d])
      throw std::invalid_argument("rank of mode " + std::to_string(d) + " must lie in [1, " +
                                  std::to_string(dims[d]) + "]");
}

}  // namespace detail

Matrix design_for_factor(const Dataset& ds, Index d, const TuckerCoeff& coeff) {
  ds.validate();
  coeff.validate();
  return detail::factor_design(detail::stack(ds), coeff, d);
}

Matrix design_for_core(const Dataset& ds, const TuckerCoeff& coeff) {
  ds.validate();
  coeff.validate();
  return detail::core_design(detail::stack(ds), coeff.factors);
}

FitResult fit_tucker(const Dataset& ds, const FitOptions& opts) {
  ds.validate();
  detail::check_ranks(ds, opts.ranks);
  const detail::Stacked st = detail::stack(ds);
  int best = 0;
  detail::EngineOutcome eo = detail::best_of_starts(st, ds, opts, {}, {}, &best);
  return detail::finalize_fit(ds, opts, std::move(eo), best, -1, true);
}

FitResult fit_cp(const Dataset& ds, Index rank, FitOptions opts) {
  ds.validate();
  const auto dims = ds.xdims();
  opts.ranks.assign(dims.size(), rank);
  detail::check_ranks(ds, opts.ranks);
  if (opts.init) {
    opts.init->validate();
  }
  const detail::Stacked st = detail::stack(ds);
  detail::EngineConfig cfg;
  cfg.update_core = false;

  // Random starts need the superdiagonal core; build them here rather than
  // letting best_of_starts draw a random core.
  const Vector gamma0 = detail::null_gamma(ds, opts.family);
  std::vector<TuckerCoeff> inits;
  if (opts.init) {
    inits.push_back(*opts.init);
  } else {
    // The superdiagonal core is fixed at ones, so the unit-predictor scaling
    // goes into the factors instead.
    double cells = static_cast<double>(rank);
    for (Index p : dims) cells *= static_cast<double>(p);
    const double factor_scale =
        std::pow(cells, -0.5 / static_cast<double>(dims.size()));
    for (int s = 0; s < std::max(1, opts.n_starts); ++s) {
      TuckerCoeff c = detail::random_start(ds, opts, gamma0, s);
      CpCoeff cp{c.factors, c.gamma};
      for (Matrix& b : cp.factors) b *= factor_scale;
      inits.push_back(cp_to_tucker(cp));
    }
  }
  FitOptions single = opts;
  single.init.reset();

  std::vector<detail::EngineOutcome> outs(inits.size());
  parallel_for(static_cast<int>(inits.size()), opts.threads, [&](int i) {
    outs[static_cast<std::size_t>(i)] =
        detail::run_block_relaxation(st, ds, single, inits[static_cast<std::size_t>(i)], cfg);
  });
  int best = 0;
  for (std::size_t i = 1; i < outs.size(); ++i)
    if (outs[i].objective > outs[static_cast<std::size_t>(best)].objective + 1e-10)
      best = static_cast<int>(i);
  return detail::finalize_fit(ds, opts, std::move(outs[static_cast<std::size_t>(best)]), best,
                              rank, false);
}

TuckerCoeff canonicalize(const TuckerCoeff& c) {
  c.validate();
  TuckerCoeff out = c;
  for (Index d = 0; d < c.order(); ++d) {
    const Matrix& b = c.factors[static_cast<std::size_t>(d)];
    const Index r = b.cols();
    Matrix lead = b.topRows(r);
    Eigen::FullPivLU<Matrix> lu(lead);
    if (!lu.isInvertible())
      throw std::runtime_error("canonicalize: leading " + std::to_string(r) + "x" +
                               std::to_string(r) + " block of factor " + std::to_string(d) +
                               " is singular");
    const Matrix o = lu.inverse();           // B_d O_d has identity leading block
    out.factors[static_cast<std::size_t>(d)] = b * o;
    out.core = mode_multiply(out.core, d, lead);  // G x_d O_d^{-1}
  }
  return out;
}

OrderSelection select_order(const Dataset& ds, const std::vector<std::vector<Index>>& candidates,
                            const FitOptions& opts) {
  if (candidates.empty()) throw std::invalid_argument("select_order: no candidates");
  ds.validate();
  const detail::Stacked st = detail::stack(ds);
  const auto dims = ds.xdims();
  const Index n = ds.n();

  OrderSelection sel;
  std::vector<detail::EngineOutcome> outcomes;
  std::vector<int> starts;

  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    FitOptions copts = opts;
    copts.ranks = candidates[ci];
    detail::check_ranks(ds, copts.ranks);

    // Nested warm starts: embed every already-fitted smaller candidate.
    std::vector<TuckerCoeff> extra;
    for (std::size_t cj = 0; cj < ci; ++cj) {
      bool nested = true;
      for (std::size_t d = 0; d < dims.size(); ++d)
        if (candidates[cj][d] > candidates[ci][d]) nested = false;
      if (!nested) continue;
      const TuckerCoeff& small = outcomes[cj].coeff;
      TuckerCoeff big;
      big.gamma = small.gamma;
      RngStream pad_rng = RngStream(opts.seed).substream("order-pad", ci * 1000 + cj);
      big.core = DenseTensor(copts.ranks);
      const double pad_scale =
          1e-8 * std::max(1e-12, small.core.data().norm() /
                                     std::sqrt(static_cast<double>(small.core.size())));
      for (Index i = 0; i < big.core.size(); ++i) big.core[i] = pad_scale * pad_rng.normal();
      // Copy the small core into the leading block.
      std::vector<Index> idx(dims.size(), 0);
      for (Index i = 0; i < small.core.size(); ++i) {
        big.core.at(std::span<const Index>(idx.data(), idx.size())) = small.core[i];
        for (std::size_t k = 0; k < idx.size(); ++k) {
          if (++idx[k] < small.core.dim(static_cast<Index>(k))) break;
          idx[k] = 0;
        }
      }
      for (std::size_t d = 0; d < dims.size(); ++d) {
        Matrix b(dims[d], copts.ranks[d]);
        for (Index j = 0; j < b.size(); ++j) b.data()[j] = pad_rng.normal();
        b.leftCols(small.factors[d].cols()) = small.factors[d];
        big.factors.push_back(std::move(b));
      }
      extra.push_back(std::move(big));
    }

    int best = 0;
    detail::EngineOutcome eo = detail::best_of_starts(st, ds, copts, {}, extra, &best);

    OrderCandidate row;
    row.ranks = copts.ranks;
    row.df = tucker_df(dims, copts.ranks).df;
    row.converged = eo.converged;

    const Matrix xg = detail::core_design(st, eo.coeff.factors);
    Vector eta = xg * vec(eo.coeff.core);
    if (ds.has_z()) eta += ds.z * eo.coeff.gamma;
    row.deviance = deviance(opts.family, ds.y, eta);
    row.loglik = detail::profiled_loglik(opts.family, ds, eo.loglik, row.deviance);
    row.bic = bic(row.loglik, n, row.df + eo.coeff.gamma.size());

    // Sample-size heuristic from the order-selection guideline: the per-step
    // ratio n / #params should exceed 2 (normal) or 5 (logistic).
    const double bound = opts.family.kind == Family::bernoulli ? 5.0 : 2.0;
    Index core_size = 1;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      core_size *= copts.ranks[d];
      if (static_cast<double>(n) / static_cast<double>(dims[d] * copts.ranks[d]) < bound) {
        row.size_warning = true;
        row.warning = "n/(p_d R_d) below " + std::to_string(static_cast<int>(bound)) +
                      " for mode " + std::to_string(d);
      }
    }
    if (static_cast<double>(n) / static_cast<double>(core_size) < bound) {
      row.size_warning = true;
      row.warning = "n/(prod R_d) below " + std::to_string(static_cast<int>(bound));
    }

    sel.table.push_back(std::move(row));
    outcomes.push_back(std::move(eo));
    starts.push_back(best);
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < sel.table.size(); ++i) {
    const double diff = sel.table[i].bic - sel.table[best].bic;
    if (diff < -1e-9 || (std::abs(diff) <= 1e-9 && sel.table[i].df < sel.table[best].df))
      best = i;
  }
  sel.best_index = best;
  FitOptions bopts = opts;
  bopts.ranks = candidates[best];
  sel.best = detail::finalize_fit(ds, bopts, std::move(outcomes[best]), starts[best], -1, true);
  return sel;
}

}  // namespace tensorreg
