#include "tensorreg/simlab.hpp"

#include "tensorreg/parallel.hpp"
#include "tensorreg/rng.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tensorreg {

namespace {

// Exact Poisson sampling: Knuth's product method for small means, recursive
// halving (Pois(m) = Pois(m/2) + Pois(m/2)) above.
double sample_poisson(RngStream& rng, double mean) {
  if (mean <= 0.0) return 0.0;
  if (mean > 64.0) return sample_poisson(rng, mean / 2.0) + sample_poisson(rng, mean / 2.0);
  const double limit = std::exp(-mean);
  double prod = 1.0;
  double k = -1.0;
  do {
    prod *= 1.0 - rng.uniform();
    k += 1.0;
  } while (prod > limit);
  return k;
}

DenseTensor shape_mask(const SignalSpec& s) {
  if (s.dims.size() != 2)
    throw std::invalid_argument("make_signal: named shapes require a 2-D grid");
  const Index p = s.dims[0], q = s.dims[1];
  if (p < 8 || q < 8) throw std::invalid_argument("make_signal: shape grid too small");
  DenseTensor b(s.dims);
  const double ci = (static_cast<double>(p) - 1.0) / 2.0;
  const double cj = (static_cast<double>(q) - 1.0) / 2.0;
  auto set = [&](Index i, Index j) { b.at({i, j}) = 1.0; };

  switch (s.kind) {
    case SignalKind::square:
      // Centered block of half-width p/8 per side.
      for (Index i = p / 2 - p / 8; i < p / 2 + p / 8; ++i)
        for (Index j = q / 2 - q / 8; j < q / 2 + q / 8; ++j) set(i, j);
      break;
    case SignalKind::cross:
      // Two centered orthogonal bars: length half the grid, width q/16.
      for (Index i = p / 2 - p / 4; i < p / 2 + p / 4; ++i)
        for (Index j = q / 2 - q / 32; j < q / 2 + q / 32; ++j) set(i, j);
      for (Index i = p / 2 - p / 32; i < p / 2 + p / 32; ++i)
        for (Index j = q / 2 - q / 4; j < q / 2 + q / 4; ++j) set(i, j);
      break;
    case SignalKind::disk:
      // Centered disk of radius p/4.
      for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < q; ++j) {
          const double di = static_cast<double>(i) - ci, dj = static_cast<double>(j) - cj;
          if (di * di + dj * dj <= static_cast<double>(p / 4) * static_cast<double>(p / 4))
            set(i, j);
        }
      break;
    case SignalKind::t_shape:
      // Top bar plus centered stem.
      for (Index i = p / 8; i < p / 4; ++i)
        for (Index j = q / 4; j < 3 * q / 4; ++j) set(i, j);
      for (Index i = p / 4; i < 3 * p / 4; ++i)
        for (Index j = q / 2 - q / 16; j < q / 2 + q / 16; ++j) set(i, j);
      break;
    case SignalKind::triangle:
      // Filled triangle, apex at the top center, base width q/2.
      for (Index i = p / 4; i < 3 * p / 4; ++i) {
        const double frac =
            static_cast<double>(i - p / 4 + 1) / static_cast<double>(p / 2);
        const double halfw = frac * static_cast<double>(q) / 4.0;
        for (Index j = 0; j < q; ++j)
          if (std::abs(static_cast<double>(j) - cj) <= halfw) set(i, j);
      }
      break;
    case SignalKind::butterfly:
      // Bowtie: two side triangles meeting at the center.
      for (Index i = 0; i < p; ++i)
        for (Index j = 0; j < q; ++j) {
          const double di = std::abs(static_cast<double>(i) - ci);
          const double dj = std::abs(static_cast<double>(j) - cj);
          if (dj <= static_cast<double>(q) / 4.0 && di <= dj) set(i, j);
        }
      break;
    default:
      throw std::logic_error("shape_mask: not a named shape");
  }
  return b;
}

}  // namespace

DenseTensor make_signal(const SignalSpec& s) {
  if (s.dims.empty()) throw std::invalid_argument("make_signal: empty dims");
  if (s.kind == SignalKind::random_tucker || s.kind == SignalKind::random_drank) {
    if (s.ranks.size() != s.dims.size())
      throw std::invalid_argument("make_signal: random kinds need one rank per mode");
    RngStream root(s.seed);
    TuckerCoeff c;
    c.core = DenseTensor(s.ranks);
    RngStream core_rng = root.substream("core");
    for (Index i = 0; i < c.core.size(); ++i) c.core[i] = core_rng.normal();
    for (std::size_t d = 0; d < s.dims.size(); ++d) {
      if (s.ranks[d] < 1 || s.ranks[d] > s.dims[d])
        throw std::invalid_argument("make_signal: rank exceeds dimension for mode " +
                                    std::to_string(d));
      RngStream frng = root.substream("factor", d);
      Matrix b(s.dims[d], s.ranks[d]);
      for (Index j = 0; j < b.size(); ++j) b.data()[j] = frng.normal();
      c.factors.push_back(std::move(b));
    }
    return tucker_reconstruct(c);
  }
  return shape_mask(s);
}

Dataset simulate_dataset(const DenseTensor& b_true, const Vector& gamma, Index n,
                         const GlmFamily& f, NoiseMode noise, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("simulate_dataset: n must be >= 1");
  if (f.kind != Family::normal && noise == NoiseMode::var_mu_over_10)
    throw std::invalid_argument("simulate_dataset: var_mu_over_10 noise requires the normal family");

  RngStream root(seed);
  Dataset ds;
  ds.y.resize(n);
  ds.x.reserve(static_cast<std::size_t>(n));

  RngStream xrng = root.substream("x");
  for (Index i = 0; i < n; ++i) {
    DenseTensor t(b_true.dims());
    for (Index k = 0; k < t.size(); ++k) t[k] = xrng.normal();
    ds.x.push_back(std::move(t));
  }
  const Index p0 = gamma.size();
  if (p0 > 0) {
    RngStream zrng = root.substream("z");
    ds.z.resize(n, p0);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p0; ++j) ds.z(i, j) = zrng.normal();
  }

  Vector eta(n);
  for (Index i = 0; i < n; ++i) {
    eta[i] = inner(b_true, ds.x[static_cast<std::size_t>(i)]);
    if (p0 > 0) eta[i] += ds.z.row(i).dot(gamma);
  }

  RngStream yrng = root.substream("ynoise");
  switch (f.kind) {
    case Family::normal: {
      double sigma2 = 1.0;
      if (noise == NoiseMode::var_mu_over_10) {
        const double mean = eta.mean();
        sigma2 = (eta.array() - mean).square().sum() / static_cast<double>(n) / 10.0;
        if (sigma2 <= 0.0) sigma2 = 1e-12;
      }
      const double sd = std::sqrt(sigma2);
      for (Index i = 0; i < n; ++i) ds.y[i] = eta[i] + sd * yrng.normal();
      break;
    }
    case Family::bernoulli:
      for (Index i = 0; i < n; ++i)
        ds.y[i] = yrng.uniform() < 1.0 / (1.0 + std::exp(-eta[i])) ? 1.0 : 0.0;
      break;
    case Family::poisson:
      for (Index i = 0; i < n; ++i) ds.y[i] = sample_poisson(yrng, std::exp(eta[i]));
      break;
  }
  return ds;
}

double rmse(const DenseTensor& b_hat, const DenseTensor& b_true) {
  if (b_hat.dims() != b_true.dims()) throw std::invalid_argument("rmse: dimension mismatch");
  return std::sqrt((b_hat.data() - b_true.data()).squaredNorm() /
                   static_cast<double>(b_hat.size()));
}

namespace {

SimResult summarize(std::string label, std::vector<RepOutcome> reps) {
  SimResult r;
  r.label = std::move(label);
  r.per_rep = std::move(reps);
  double sum = 0.0;
  int m = 0;
  for (const RepOutcome& o : r.per_rep)
    if (!o.failed) {
      sum += o.rmse;
      ++m;
    }
  r.replications = m;
  r.rmse_mean = m > 0 ? sum / m : 0.0;
  if (m > 1) {
    double ss = 0.0;
    for (const RepOutcome& o : r.per_rep)
      if (!o.failed) ss += (o.rmse - r.rmse_mean) * (o.rmse - r.rmse_mean);
    r.rmse_sd = std::sqrt(ss / (m - 1));
  }
  return r;
}

FitOptions fit_options(const ReplicateParams& p, std::vector<Index> ranks, std::uint64_t seed) {
  FitOptions o;
  o.ranks = std::move(ranks);
  o.family = p.family;
  o.tol = p.tol;
  o.max_iter = p.max_iter;
  o.n_starts = p.n_starts;
  o.seed = seed;
  o.threads = 1;  // replications own the parallelism
  return o;
}

}  // namespace

ReplicateOutput replicate(Protocol protocol, const ReplicateParams& params, int n_reps,
                          std::uint64_t base_seed) {
  if (n_reps < 1) throw std::invalid_argument("replicate: n_reps must be >= 1");
  ReplicateOutput out;
  using clock = std::chrono::steady_clock;

  auto timed_fit = [](auto&& fn, RepOutcome& o) {
    const auto t0 = clock::now();
    try {
      fn();
    } catch (const std::exception&) {
      o.failed = true;
    }
    o.seconds = std::chrono::duration<double>(clock::now() - t0).count();
  };

  switch (protocol) {
    case Protocol::consistency_curve: {
      if (params.n_grid.empty())
        throw std::invalid_argument("consistency_curve: empty n grid");
      for (Index n : params.n_grid) {
        std::vector<RepOutcome> reps(static_cast<std::size_t>(n_reps));
        parallel_for(n_reps, params.threads, [&](int r) {
          RepOutcome& o = reps[static_cast<std::size_t>(r)];
          o.seed = base_seed + static_cast<std::uint64_t>(r);
          timed_fit(
              [&] {
                SignalSpec ss{SignalKind::random_tucker, params.dims, params.ranks, o.seed};
                const DenseTensor truth = make_signal(ss);
                const Dataset ds =
                    simulate_dataset(truth, Vector(), n, params.family, params.noise, o.seed);
                FitResult fr = fit_tucker(ds, fit_options(params, params.ranks, o.seed));
                o.rmse = rmse(tucker_reconstruct(fr.coeff), truth);
                o.deviance = fr.deviance;
                o.converged = fr.converged;
              },
              o);
        });
        out.results.push_back(summarize("n=" + std::to_string(n), std::move(reps)));
      }
      break;
    }

    case Protocol::tucker_vs_cp: {
      Index max_rank = 0;
      for (Index r : params.ranks) max_rank = std::max(max_rank, r);
      std::vector<RepOutcome> tucker_reps(static_cast<std::size_t>(n_reps));
      std::vector<RepOutcome> cp_reps(static_cast<std::size_t>(n_reps));
      parallel_for(n_reps, params.threads, [&](int r) {
        RepOutcome& ot = tucker_reps[static_cast<std::size_t>(r)];
        RepOutcome& oc = cp_reps[static_cast<std::size_t>(r)];
        ot.seed = oc.seed = base_seed + static_cast<std::uint64_t>(r);
        SignalSpec ss{SignalKind::random_drank, params.dims, params.ranks, ot.seed};
        const DenseTensor truth = make_signal(ss);
        const Dataset ds =
            simulate_dataset(truth, Vector(), params.n, params.family, params.noise, ot.seed);
        timed_fit(
            [&] {
              FitResult fr = fit_tucker(ds, fit_options(params, params.ranks, ot.seed));
              ot.rmse = rmse(tucker_reconstruct(fr.coeff), truth);
              ot.deviance = fr.deviance;
              ot.converged = fr.converged;
            },
            ot);
        timed_fit(
            [&] {
              FitResult fr =
                  fit_cp(ds, max_rank, fit_options(params, params.ranks, ot.seed ^ 0x9e37ULL));
              oc.rmse = rmse(tucker_reconstruct(fr.coeff), truth);
              oc.deviance = fr.deviance;
              oc.converged = fr.converged;
            },
            oc);
      });
      out.results.push_back(summarize("tucker", std::move(tucker_reps)));
      out.results.push_back(summarize("cp", std::move(cp_reps)));
      break;
    }

    case Protocol::shape_recovery: {
      if (params.orders.empty())
        throw std::invalid_argument("shape_recovery: no TR orders given");
      SignalSpec ss{params.shape, params.dims, {}, 0};
      const DenseTensor truth = make_signal(ss);
      const Vector gamma = Vector::Ones(params.gamma_len);
      std::vector<std::vector<RepOutcome>> reps(
          params.orders.size(), std::vector<RepOutcome>(static_cast<std::size_t>(n_reps)));
      std::vector<std::pair<std::string, DenseTensor>> estimates(params.orders.size());

      parallel_for(n_reps, params.threads, [&](int r) {
        const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(r);
        const Dataset ds =
            simulate_dataset(truth, gamma, params.n, params.family, params.noise, seed);
        for (std::size_t oi = 0; oi < params.orders.size(); ++oi) {
          RepOutcome& o = reps[oi][static_cast<std::size_t>(r)];
          o.seed = seed;
          const std::vector<Index> ranks(params.dims.size(), params.orders[oi]);
          timed_fit(
              [&] {
                FitResult fr = fit_tucker(ds, fit_options(params, ranks, seed));
                const DenseTensor bhat = tucker_reconstruct(fr.coeff);
                o.rmse = rmse(bhat, truth);
                o.deviance = fr.deviance;
                o.converged = fr.converged;
                if (r == 0)
                  estimates[oi] = {"TR(" + std::to_string(params.orders[oi]) + ")", bhat};
              },
              o);
        }
      });
      for (std::size_t oi = 0; oi < params.orders.size(); ++oi)
        out.results.push_back(summarize("TR(" + std::to_string(params.orders[oi]) + ")",
                                        std::move(reps[oi])));
      out.estimates = std::move(estimates);
      break;
    }
  }
  return out;
}

}  // namespace tensorreg
