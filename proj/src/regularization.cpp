#include "tensorreg/regularization.hpp"

#include "estimator_detail.hpp"
#include "tensorreg/parallel.hpp"
#include "tensorreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tensorreg {

namespace {

// Exact minimizer over a quadratic piece of the objective
// f(t) = 0.5*a*(t - z)^2 + c0 + c1*t + c2*t^2 on [lo, hi] (t >= 0 branch).
// Candidates are the clamped stationary point and both endpoints.
void piece_candidates(double a, double z, double c1, double c2, double lo, double hi,
                      std::vector<double>& cand) {
  cand.push_back(lo);
  if (std::isfinite(hi)) cand.push_back(hi);
  const double denom = a + 2.0 * c2;
  if (denom > 0.0) {
    const double t = (a * z - c1) / denom;
    if (t > lo && (!std::isfinite(hi) || t < hi)) cand.push_back(t);
  }
}

}  // namespace

void PenaltySpec::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("penalty: lambda must be nonnegative");
  switch (family) {
    case PenaltyFamily::power:
      if (eta <= 0.0 || eta > 2.0) throw std::invalid_argument("power penalty: eta in (0,2]");
      break;
    case PenaltyFamily::elastic_net:
      if (eta < 1.0 || eta > 2.0)
        throw std::invalid_argument("elastic net penalty: eta in [1,2]");
      break;
    case PenaltyFamily::scad:
      if (eta <= 2.0) throw std::invalid_argument("SCAD penalty: eta > 2");
      break;
    case PenaltyFamily::mcp:
      if (eta <= 0.0) throw std::invalid_argument("MC+ penalty: eta > 0");
      break;
    case PenaltyFamily::lasso:
    case PenaltyFamily::ridge:
      break;
  }
}

double PenaltySpec::default_eta(PenaltyFamily f) {
  switch (f) {
    case PenaltyFamily::scad:
      return 3.7;
    case PenaltyFamily::mcp:
      return 2.0;
    case PenaltyFamily::elastic_net:
      return 1.5;
    case PenaltyFamily::power:
      return 1.0;
    default:
      return 1.0;
  }
}

double penalty_value(const PenaltySpec& p, double x) {
  p.validate();
  const double t = std::abs(x);
  const double l = p.lambda;
  switch (p.family) {
    case PenaltyFamily::lasso:
      return l * t;
    case PenaltyFamily::ridge:
      return l * t * t;
    case PenaltyFamily::power:
      return l * std::pow(t, p.eta);
    case PenaltyFamily::elastic_net:
      return l * ((p.eta - 1.0) * t * t / 2.0 + (2.0 - p.eta) * t);
    case PenaltyFamily::scad: {
      // Integral of the SCAD derivative lambda*{1(t<=l) + (eta*l-t)_+ /
      // ((eta-1)l) 1(t>l)} from 0 to t.
      if (t <= l) return l * t;
      if (t <= p.eta * l) return (2.0 * p.eta * l * t - t * t - l * l) / (2.0 * (p.eta - 1.0));
      return l * l * (p.eta + 1.0) / 2.0;
    }
    case PenaltyFamily::mcp:
      if (t < p.eta * l) return l * t - t * t / (2.0 * p.eta);
      return 0.5 * l * l * p.eta;
  }
  return 0.0;
}

double threshold(const PenaltySpec& p, double z, double a) {
  p.validate();
  if (a <= 0.0) throw std::invalid_argument("threshold: curvature must be positive");
  if (p.lambda == 0.0) return z;
  const double sgn = z < 0.0 ? -1.0 : 1.0;
  const double az = std::abs(z);
  const double l = p.lambda;

  switch (p.family) {
    case PenaltyFamily::lasso:
      return sgn * std::max(az - l / a, 0.0);
    case PenaltyFamily::ridge:
      return a * z / (a + 2.0 * l);
    case PenaltyFamily::elastic_net: {
      const double soft = std::max(az - l * (2.0 - p.eta) / a, 0.0);
      return sgn * a * soft / (a + l * (p.eta - 1.0));
    }
    case PenaltyFamily::scad:
    case PenaltyFamily::mcp: {
      // Piecewise quadratic; gather the candidate minimizers of every piece
      // and evaluate the exact objective.
      std::vector<double> cand;
      cand.reserve(8);
      if (p.family == PenaltyFamily::scad) {
        piece_candidates(a, az, l, 0.0, 0.0, l, cand);
        piece_candidates(a, az, p.eta * l / (p.eta - 1.0), -0.5 / (p.eta - 1.0), l, p.eta * l,
                         cand);
        piece_candidates(a, az, 0.0, 0.0, p.eta * l, std::numeric_limits<double>::infinity(),
                         cand);
      } else {
        piece_candidates(a, az, l, -0.5 / p.eta, 0.0, p.eta * l, cand);
        piece_candidates(a, az, 0.0, 0.0, p.eta * l, std::numeric_limits<double>::infinity(),
                         cand);
      }
      double best_t = 0.0, best_f = std::numeric_limits<double>::infinity();
      for (double t : cand) {
        const double f = 0.5 * a * (t - az) * (t - az) + penalty_value(p, t);
        if (f < best_f - 0.0 || (f == best_f && t < best_t)) {
          best_f = f;
          best_t = t;
        }
      }
      return sgn * best_t;
    }
    case PenaltyFamily::power: {
      if (p.eta == 1.0) return sgn * std::max(az - l / a, 0.0);
      if (p.eta == 2.0) return a * z / (a + 2.0 * l);
      if (az == 0.0) return 0.0;
      // Stationarity: a(t - az) + l*eta*t^(eta-1) = 0 on (0, az].
      auto grad = [&](double t) { return a * (t - az) + l * p.eta * std::pow(t, p.eta - 1.0); };
      double lo, hi;
      if (p.eta > 1.0) {
        // Convex: unique root in (0, az).
        lo = 0.0;
        hi = az;
      } else {
        // Nonconvex: t=0 is always a local minimum; an interior minimum
        // exists only if the gradient goes negative past its own minimum.
        const double tc =
            std::pow(l * p.eta * (1.0 - p.eta) / a, 1.0 / (2.0 - p.eta));
        if (tc >= az || grad(tc) >= 0.0) return 0.0;
        lo = tc;
        hi = az;
      }
      // Safeguarded Newton (bisection fallback) on the gradient.
      double t = 0.5 * (lo + hi);
      bool ok = false;
      for (int it = 0; it < 200; ++it) {
        const double g = grad(t);
        if (std::abs(g) < 1e-13 * a * (1.0 + az)) {
          ok = true;
          break;
        }
        if (g > 0.0)
          hi = t;
        else
          lo = t;
        const double dg = a + l * p.eta * (p.eta - 1.0) * std::pow(t, p.eta - 2.0);
        double tn = dg > 0.0 ? t - g / dg : 0.5 * (lo + hi);
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(tn - t) < 1e-15 * (1.0 + std::abs(t))) {
          t = tn;
          ok = true;
          break;
        }
        t = tn;
      }
      if (!ok && hi - lo > 1e-10 * (1.0 + az))
        throw std::runtime_error("threshold: power-family solver failed to converge");
      if (p.eta < 1.0) {
        // Compare the interior minimum against t = 0.
        const double f_int = 0.5 * a * (t - az) * (t - az) + penalty_value(p, t);
        const double f_zero = 0.5 * a * az * az;
        if (f_zero <= f_int) return 0.0;
      }
      return sgn * t;
    }
  }
  return z;
}

FitResult fit_tucker_regularized(const Dataset& ds, const FitOptions& opts,
                                 const PenaltySpec& penalty) {
  penalty.validate();
  ds.validate();
  detail::check_ranks(ds, opts.ranks);
  const detail::Stacked st = detail::stack(ds);
  detail::EngineConfig cfg;
  cfg.penalty = &penalty;
  int best = 0;
  detail::EngineOutcome eo = detail::best_of_starts(st, ds, opts, cfg, {}, &best);
  // No canonicalization: the unit-column constraint is the normal form here.
  FitResult res = detail::finalize_fit(ds, opts, std::move(eo), best, -1, false);
  // Under core sparsity the effective df counts the surviving core entries.
  Index nnz = 0;
  for (Index i = 0; i < res.coeff.core.size(); ++i)
    if (res.coeff.core[i] != 0.0) ++nnz;
  const auto dims = ds.xdims();
  const auto ranks = res.coeff.ranks();
  Index lin = 0, adj = 0;
  for (std::size_t d = 0; d < dims.size(); ++d) {
    lin += dims[d] * ranks[d];
    adj += ranks[d] * ranks[d];
  }
  res.df = nnz + lin - adj;
  res.bic = bic(res.loglik, ds.n(), res.df + res.coeff.gamma.size());
  return res;
}

TuneResult tune_lambda(const Dataset& ds, const FitOptions& opts, const PenaltySpec& base,
                       const std::vector<double>& grid, TuneMethod method) {
  if (grid.empty()) throw std::invalid_argument("tune_lambda: empty grid");
  ds.validate();
  TuneResult out;
  out.table.resize(grid.size());

  // Walk the grid from the largest lambda down, warm-starting each fit from
  // the previous solution (the usual pathwise continuation).
  std::vector<std::size_t> order(grid.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

  if (method == TuneMethod::bic) {
    FitOptions fo = opts;
    fo.threads = 1;
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      PenaltySpec p = base;
      p.lambda = grid[order[oi]];
      FitResult fr = fit_tucker_regularized(ds, fo, p);
      fo.init = fr.coeff;
      TuneRow row;
      row.lambda = p.lambda;
      row.score = fr.bic;
      for (Index i = 0; i < fr.coeff.core.size(); ++i)
        if (fr.coeff.core[i] != 0.0) ++row.nonzero_core;
      out.table[order[oi]] = row;
    }
  } else {
    // Deterministic 5-fold split from a seeded shuffle.
    const Index n = ds.n();
    if (n < 5) throw std::invalid_argument("tune_lambda: need n >= 5 for 5-fold CV");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    RngStream shuffle_rng = RngStream(opts.seed).substream("folds");
    for (Index i = n - 1; i > 0; --i)
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[shuffle_rng.below(static_cast<std::uint64_t>(i + 1))]);

    constexpr int kFolds = 5;
    struct Split {
      Dataset train, test;
    };
    std::vector<Split> splits(kFolds);
    for (int f = 0; f < kFolds; ++f) {
      Split sp;
      for (Index i = 0; i < n; ++i) {
        const Index row = perm[static_cast<std::size_t>(i)];
        Dataset& dst = (i % kFolds == f) ? sp.test : sp.train;
        dst.x.push_back(ds.x[static_cast<std::size_t>(row)]);
      }
      auto fill = [&](Dataset& dst, bool test_part) {
        const Index m = static_cast<Index>(dst.x.size());
        dst.y.resize(m);
        if (ds.has_z()) dst.z.resize(m, ds.z.cols());
        Index k = 0;
        for (Index i = 0; i < n; ++i) {
          if ((i % kFolds == f) != test_part) continue;
          const Index row = perm[static_cast<std::size_t>(i)];
          dst.y[k] = ds.y[row];
          if (ds.has_z()) dst.z.row(k) = ds.z.row(row);
          ++k;
        }
      };
      fill(sp.train, false);
      fill(sp.test, true);
      splits[f] = std::move(sp);
    }

    // One task per fold, each walking the lambda path with warm starts;
    // deterministic merge by (lambda, fold) index.
    std::vector<double> dev(grid.size() * kFolds, 0.0);
    parallel_for(kFolds, opts.threads, [&](int f) {
      FitOptions fo = opts;
      fo.threads = 1;
      fo.seed = RngStream(opts.seed).substream("cv", static_cast<std::uint64_t>(f)).next_u64();
      for (std::size_t oi = 0; oi < order.size(); ++oi) {
        PenaltySpec p = base;
        p.lambda = grid[order[oi]];
        FitResult fr = fit_tucker_regularized(splits[static_cast<std::size_t>(f)].train, fo, p);
        fo.init = fr.coeff;
        const Dataset& te = splits[static_cast<std::size_t>(f)].test;
        const Matrix xg = design_for_core(te, fr.coeff);
        Vector eta = xg * vec(fr.coeff.core);
        if (te.has_z()) eta += te.z * fr.coeff.gamma;
        dev[order[oi] * kFolds + static_cast<std::size_t>(f)] =
            deviance(opts.family, te.y, eta);
      }
    });
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
      TuneRow row;
      row.lambda = grid[gi];
      double s = 0.0;
      for (int f = 0; f < kFolds; ++f) s += dev[gi * kFolds + static_cast<std::size_t>(f)];
      row.score = s / kFolds;
      out.table[gi] = row;
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < out.table.size(); ++i) {
    const TuneRow& r = out.table[i];
    const TuneRow& b = out.table[best];
    if (r.score < b.score - 1e-12 ||
        (std::abs(r.score - b.score) <= 1e-12 && r.lambda > b.lambda))
      best = i;
  }
  out.best_index = best;
  out.best_lambda = out.table[best].lambda;
  return out;
}

}  // namespace tensorreg
