// treg: generalized linear tensor regression with Tucker-structured
// coefficients. Subcommands: df, simulate, fit, infer, downsize, compare,
// benchmark. Every output directory receives a manifest tying the results to
// the command line, seed and file digests.

#include "CLI11.hpp"

#include "tensorreg/downsize.hpp"
#include "tensorreg/estimator.hpp"
#include "tensorreg/inference.hpp"
#include "tensorreg/io.hpp"
#include "tensorreg/regularization.hpp"
#include "tensorreg/simlab.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace tensorreg;

namespace {

std::vector<Index> parse_index_list(const std::string& csv, const char* what) {
  std::vector<Index> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(static_cast<Index>(std::stoll(cell)));
    } catch (...) {
      throw std::invalid_argument(std::string(what) + ": cannot parse '" + cell + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& csv, const char* what) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (...) {
      throw std::invalid_argument(std::string(what) + ": cannot parse '" + cell + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

GlmFamily parse_family(const std::string& name, double dispersion) {
  GlmFamily f;
  f.dispersion = dispersion;
  if (name == "normal")
    f.kind = Family::normal;
  else if (name == "bernoulli")
    f.kind = Family::bernoulli;
  else if (name == "poisson")
    f.kind = Family::poisson;
  else
    throw std::invalid_argument("unknown family '" + name + "'");
  return f;
}

PenaltyFamily parse_penalty(const std::string& name) {
  if (name == "lasso") return PenaltyFamily::lasso;
  if (name == "ridge") return PenaltyFamily::ridge;
  if (name == "power") return PenaltyFamily::power;
  if (name == "enet") return PenaltyFamily::elastic_net;
  if (name == "scad") return PenaltyFamily::scad;
  if (name == "mcp") return PenaltyFamily::mcp;
  throw std::invalid_argument("unknown penalty '" + name + "'");
}

SignalKind parse_signal(const std::string& name) {
  if (name == "square") return SignalKind::square;
  if (name == "cross") return SignalKind::cross;
  if (name == "disk") return SignalKind::disk;
  if (name == "t-shape") return SignalKind::t_shape;
  if (name == "triangle") return SignalKind::triangle;
  if (name == "butterfly") return SignalKind::butterfly;
  if (name == "random-tucker") return SignalKind::random_tucker;
  if (name == "random-drank") return SignalKind::random_drank;
  throw std::invalid_argument("unknown signal '" + name + "'");
}

std::string ranks_tag(const std::vector<Index>& r) {
  std::string s;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) s += 'x';
    s += std::to_string(r[i]);
  }
  return s;
}

// Manifest bookkeeping shared by all writing subcommands.
struct Run {
  RunManifest manifest;
  fs::path out;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void opt(const std::string& k, const std::string& v) { manifest.options.emplace_back(k, v); }
  void input(const fs::path& p) { manifest.inputs.emplace_back(p.string(), file_digest(p)); }
  void output(const fs::path& p) { manifest.outputs.emplace_back(p.string(), file_digest(p)); }

  void finish() {
    manifest.version = version_string();
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out / "manifest.txt", manifest);
  }
};

std::string joined_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

void write_results_csv(const fs::path& path, const std::string& protocol,
                       const std::vector<std::pair<std::string, SimResult>>& labeled,
                       Index n_value, Run& run) {
  std::string buf = "protocol,n,ranks,rep,rmse,converged,seconds\n";
  char num[64];
  for (const auto& [ranks, res] : labeled) {
    for (std::size_t r = 0; r < res.per_rep.size(); ++r) {
      const RepOutcome& o = res.per_rep[r];
      buf += protocol + ",";
      buf += std::to_string(n_value) + ",";
      buf += ranks + "," + std::to_string(r) + ",";
      std::snprintf(num, sizeof(num), "%.17g", o.failed ? std::nan("") : o.rmse);
      buf += num;
      buf += ",";
      buf += o.converged ? "1" : "0";
      buf += ",";
      std::snprintf(num, sizeof(num), "%.6g", o.seconds);
      buf += num;
      buf += "\n";
    }
  }
  atomic_write_bytes(path, buf);
  run.output(path);
}

// ---------------------------------------------------------------------------
// subcommand: df

struct DfArgs {
  std::string dims, tucker_ranks;
  Index cp_rank = 0;
};

int run_df(const DfArgs& a) {
  const auto dims = parse_index_list(a.dims, "--dims");
  if (a.tucker_ranks.empty() && a.cp_rank <= 0)
    throw std::invalid_argument("df: give --tucker-ranks and/or --cp-rank");
  if (!a.tucker_ranks.empty()) {
    const auto ranks = parse_index_list(a.tucker_ranks, "--tucker-ranks");
    const ModelSize ms = tucker_df(dims, ranks);
    std::cout << "tucker df: " << ms.df << " (raw " << ms.raw_params << ")\n";
  }
  if (a.cp_rank > 0) {
    const ModelSize ms = cp_df(dims, a.cp_rank);
    std::cout << "cp df: " << ms.df << " (raw " << ms.raw_params << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// subcommand: simulate / benchmark / compare

struct ProtocolArgs {
  std::string protocol;
  std::string dims = "8,8,8";
  std::string ranks = "2,2,2";
  std::string n_grid;
  Index n = 0;
  int reps = 0;
  std::string family = "normal";
  std::string noise = "unit";
  std::string shape = "square";
  std::string orders = "1,2";
  Index gamma_len = 0;
  int starts = 2;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

int run_protocol(const ProtocolArgs& a, const std::string& cmdline, bool desk_defaults) {
  ReplicateParams p;
  p.dims = parse_index_list(a.dims, "--dims");
  p.ranks = parse_index_list(a.ranks, "--ranks");
  p.family = parse_family(a.family, 1.0);
  p.noise = a.noise == "var10" ? NoiseMode::var_mu_over_10 : NoiseMode::unit;
  p.shape = parse_signal(a.shape);
  p.orders = parse_index_list(a.orders, "--orders");
  p.gamma_len = a.gamma_len;
  p.n_starts = a.starts;
  p.threads = a.threads;

  Protocol proto;
  int reps = a.reps;
  if (a.protocol == "consistency") {
    proto = Protocol::consistency_curve;
    if (!a.n_grid.empty())
      p.n_grid = parse_index_list(a.n_grid, "--n-grid");
    else if (desk_defaults)
      p.n_grid = {200, 400};
    else
      throw std::invalid_argument("benchmark consistency: --n-grid required");
    if (reps <= 0) reps = desk_defaults ? 3 : 20;
  } else if (a.protocol == "tucker-vs-cp") {
    proto = Protocol::tucker_vs_cp;
    p.n = a.n > 0 ? a.n : 400;
    if (reps <= 0) reps = desk_defaults ? 2 : 20;
  } else if (a.protocol == "shape") {
    proto = Protocol::shape_recovery;
    if (p.dims.size() != 2) p.dims = {32, 32};
    p.n = a.n > 0 ? a.n : 300;
    if (desk_defaults && a.noise == "unit") p.noise = NoiseMode::var_mu_over_10;
    p.gamma_len = a.gamma_len > 0 ? a.gamma_len : 5;
    if (reps <= 0) reps = 2;
  } else {
    throw std::invalid_argument("unknown protocol '" + a.protocol + "'");
  }

  Run run;
  run.out = a.out;
  run.manifest.command_line = cmdline;
  run.manifest.seed = a.seed;
  run.opt("protocol", a.protocol);
  run.opt("dims", a.dims);
  run.opt("ranks", a.ranks);
  run.opt("reps", std::to_string(reps));
  run.opt("tol", "1e-06");
  run.opt("max_iter", "200");
  run.opt("n_starts", std::to_string(p.n_starts));
  run.opt("threads", std::to_string(p.threads));

  const ReplicateOutput out = replicate(proto, p, reps, a.seed);

  std::vector<std::pair<std::string, SimResult>> labeled;
  for (const SimResult& r : out.results) labeled.emplace_back(r.label, r);
  write_results_csv(run.out / "results.csv", a.protocol, labeled,
                    proto == Protocol::consistency_curve ? 0 : p.n, run);

  if (proto == Protocol::consistency_curve) {
    // Plot-ready RMSE-versus-n curve.
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < out.results.size(); ++i)
      rows.push_back({static_cast<double>(p.n_grid[i]), out.results[i].rmse_mean,
                      out.results[i].rmse_sd});
    write_csv(run.out / "rmse_curve.csv", {"n", "rmse_mean", "rmse_sd"}, rows);
    run.output(run.out / "rmse_curve.csv");
  }
  for (const auto& [label, est] : out.estimates) {
    const fs::path p_est = run.out / (label + ".tnsr");
    write_tensor(p_est, est);
    run.output(p_est);
  }
  run.finish();

  for (const SimResult& r : out.results)
    std::cout << r.label << ": rmse " << r.rmse_mean << " (sd " << r.rmse_sd << ", "
              << r.replications << " reps)\n";
  return 0;
}

struct SimulateArgs : ProtocolArgs {
  std::string signal;
};

int run_simulate(const SimulateArgs& a, const std::string& cmdline) {
  if (!a.protocol.empty()) return run_protocol(a, cmdline, true);
  if (a.signal.empty())
    throw std::invalid_argument("simulate: give --signal for a dataset or --protocol");

  Run run;
  run.out = a.out;
  run.manifest.command_line = cmdline;
  run.manifest.seed = a.seed;
  run.opt("signal", a.signal);
  run.opt("dims", a.dims);
  run.opt("n", std::to_string(a.n));
  run.opt("family", a.family);
  run.opt("noise", a.noise);

  SignalSpec ss;
  ss.kind = parse_signal(a.signal);
  ss.dims = parse_index_list(a.dims, "--dims");
  if (ss.kind == SignalKind::random_tucker || ss.kind == SignalKind::random_drank)
    ss.ranks = parse_index_list(a.ranks, "--ranks");
  ss.seed = a.seed;
  const DenseTensor truth = make_signal(ss);

  const Index n = a.n > 0 ? a.n : 100;
  const Vector gamma = Vector::Ones(a.gamma_len);
  const Dataset ds =
      simulate_dataset(truth, gamma, n, parse_family(a.family, 1.0),
                       a.noise == "var10" ? NoiseMode::var_mu_over_10 : NoiseMode::unit, a.seed);

  write_dataset(run.out, ds);
  write_tensor(run.out / "truth.tnsr", truth);
  run.output(run.out / "y.csv");
  run.output(run.out / "x_list.txt");
  run.output(run.out / "truth.tnsr");
  if (ds.has_z()) run.output(run.out / "z.csv");
  run.finish();
  std::cout << "wrote dataset with n=" << n << " to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// subcommand: fit

struct FitArgs {
  std::string y, x, z;
  std::string ranks, candidates;
  Index cp_rank = 0;
  std::string family = "normal";
  double dispersion = 1.0;
  double tol = 1e-6;
  int max_iter = 200;
  int starts = 5;
  std::string penalty = "none";
  double lambda = 0.0;
  double eta = 0.0;
  std::string tune;
  std::string lambda_grid;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

int run_fit(const FitArgs& a, const std::string& cmdline) {
  const int modes = (!a.ranks.empty() ? 1 : 0) + (!a.candidates.empty() ? 1 : 0) +
                    (a.cp_rank > 0 ? 1 : 0);
  if (modes != 1)
    throw std::invalid_argument("fit: give exactly one of --ranks, --candidates, --cp-rank");

  Run run;
  run.out = a.out;
  run.manifest.command_line = cmdline;
  run.manifest.seed = a.seed;
  run.opt("family", a.family);
  run.opt("tol", std::to_string(a.tol));
  run.opt("max_iter", std::to_string(a.max_iter));
  run.opt("n_starts", std::to_string(a.starts));
  run.opt("penalty", a.penalty);
  run.opt("threads", std::to_string(a.threads));
  if (!a.tune.empty()) run.opt("tune", a.tune);

  const Dataset ds = read_dataset(a.y, a.x, a.z.empty() ? fs::path() : fs::path(a.z));
  run.input(a.y);
  run.input(a.x);
  if (!a.z.empty()) run.input(a.z);

  FitOptions opts;
  opts.family = parse_family(a.family, a.dispersion);
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  opts.n_starts = a.starts;
  opts.seed = a.seed;
  opts.threads = a.threads;

  FitResult fr;
  if (!a.candidates.empty()) {
    std::vector<std::vector<Index>> cands;
    std::stringstream ss(a.candidates);
    std::string part;
    while (std::getline(ss, part, ';')) cands.push_back(parse_index_list(part, "--candidates"));
    const OrderSelection sel = select_order(ds, cands, opts);
    std::vector<std::vector<double>> rows;
    for (const OrderCandidate& c : sel.table)
      rows.push_back({static_cast<double>(c.df), c.loglik, c.deviance, c.bic,
                      c.converged ? 1.0 : 0.0, c.size_warning ? 1.0 : 0.0});
    write_csv(run.out / "bic_table.csv",
              {"df", "loglik", "deviance", "bic", "converged", "size_warning"}, rows);
    run.output(run.out / "bic_table.csv");
    for (const OrderCandidate& c : sel.table)
      if (c.size_warning)
        std::cerr << "warning: ranks " << ranks_tag(c.ranks) << ": " << c.warning << "\n";
    std::cout << "selected ranks " << ranks_tag(sel.table[sel.best_index].ranks) << " by BIC\n";
    fr = sel.best;
  } else if (a.cp_rank > 0) {
    fr = fit_cp(ds, a.cp_rank, opts);
  } else {
    opts.ranks = parse_index_list(a.ranks, "--ranks");
    if (a.penalty == "none") {
      fr = fit_tucker(ds, opts);
    } else {
      PenaltySpec pen;
      pen.family = parse_penalty(a.penalty);
      pen.eta = a.eta > 0.0 ? a.eta : PenaltySpec::default_eta(pen.family);
      pen.lambda = a.lambda;
      if (!a.tune.empty()) {
        if (a.lambda_grid.empty()) throw std::invalid_argument("fit: --tune needs --lambda-grid");
        const auto grid = parse_double_list(a.lambda_grid, "--lambda-grid");
        const TuneResult tr = tune_lambda(ds, opts, pen, grid,
                                          a.tune == "bic" ? TuneMethod::bic : TuneMethod::cv5);
        std::vector<std::vector<double>> rows;
        for (const TuneRow& row : tr.table)
          rows.push_back({row.lambda, row.score, static_cast<double>(row.nonzero_core)});
        write_csv(run.out / "tune_table.csv", {"lambda", "score", "nonzero_core"}, rows);
        run.output(run.out / "tune_table.csv");
        pen.lambda = tr.best_lambda;
        std::cout << "tuned lambda: " << pen.lambda << "\n";
      }
      fr = fit_tucker_regularized(ds, opts, pen);
    }
  }

  write_coeff(run.out / "coeff.bin", fr.coeff);
  write_fit_report(run.out / "fit_report.csv", fr);
  run.output(run.out / "coeff.bin");
  run.output(run.out / "fit_report.csv");
  run.finish();

  std::cout << "loglik " << fr.loglik << ", deviance " << fr.deviance << ", bic " << fr.bic
            << ", df " << fr.df << (fr.converged ? "" : " (NOT converged)") << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// subcommand: infer

struct InferArgs {
  std::string y, x, z, coeff;
  std::string family = "normal";
  double dispersion = 1.0;
  bool full = false;
  std::string out;
};

int run_infer(const InferArgs& a, const std::string& cmdline) {
  Run run;
  run.out = a.out;
  run.manifest.command_line = cmdline;
  run.opt("family", a.family);
  run.opt("restricted", a.full ? "false" : "true");

  const Dataset ds = read_dataset(a.y, a.x, a.z.empty() ? fs::path() : fs::path(a.z));
  TuckerCoeff coeff = read_coeff(a.coeff);
  run.input(a.y);
  run.input(a.x);
  run.input(a.coeff);

  const GlmFamily fam = parse_family(a.family, a.dispersion);
  const bool restricted = !a.full;
  if (restricted) coeff = canonicalize(coeff);
  const ScoreInfo si = score_and_info(ds, coeff, fam, restricted);
  const Vector se = standard_errors(si);

  // Estimates in the same free-parameter layout as the score.
  Index flat_size = coeff.core.size();
  for (const Matrix& b : coeff.factors) flat_size += b.size();
  Vector flat(flat_size);
  flat.head(coeff.core.size()) = vec(coeff.core);
  Index off = coeff.core.size();
  for (const Matrix& b : coeff.factors) {
    flat.segment(off, b.size()) = Eigen::Map<const Vector>(b.data(), b.size());
    off += b.size();
  }
  Vector est;
  if (restricted) {
    const auto keep = restricted_index_map(coeff.dims(), coeff.ranks());
    est.resize(static_cast<Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) est[static_cast<Index>(k)] = flat[keep[k]];
  } else {
    est = flat;
  }

  std::vector<std::vector<double>> rows;
  for (Index k = 0; k < est.size(); ++k)
    rows.push_back({static_cast<double>(k), est[k], se[k], est[k] / se[k]});
  write_csv(run.out / "inference.csv", {"param_index", "estimate", "se", "wald_z"}, rows);
  run.output(run.out / "inference.csv");
  run.finish();
  std::cout << "wrote " << est.size() << " rows to inference.csv\n";
  return 0;
}

// ---------------------------------------------------------------------------
// subcommand: downsize

struct DownsizeArgs {
  std::string basis = "haar";
  std::string target;
  std::string in;
  std::string out;
};

int run_downsize(const DownsizeArgs& a, const std::string& cmdline) {
  Run run;
  run.out = a.out;
  run.manifest.command_line = cmdline;
  run.opt("basis", a.basis);
  run.opt("target", a.target);

  const auto target = parse_index_list(a.target, "--target");
  BasisKind kind;
  if (a.basis == "haar")
    kind = BasisKind::haar_d2;
  else if (a.basis == "db4")
    kind = BasisKind::daubechies_d4;
  else
    throw std::invalid_argument("downsize: --basis must be haar or db4");

  std::ifstream list(a.in);
  if (!list) throw std::runtime_error("cannot open " + a.in);
  run.input(a.in);
  const fs::path base = fs::path(a.in).parent_path();
  std::string line, outlist;
  std::vector<BasisSpec> bases;
  int count = 0;
  while (std::getline(list, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fs::path p(line);
    if (p.is_relative()) p = base / p;
    const DenseTensor x = read_tensor(p);
    if (bases.empty()) {
      if (static_cast<std::size_t>(x.order()) != target.size())
        throw std::invalid_argument("downsize: --target length must match tensor order");
      for (Index d = 0; d < x.order(); ++d) {
        BasisSpec s;
        s.kind = kind;
        s.p = x.dim(d);
        s.p_tilde = target[static_cast<std::size_t>(d)];
        bases.push_back(s);
      }
    }
    const DenseTensor small = downsize_tensor(x, bases);
    const fs::path outp = run.out / p.filename();
    write_tensor(outp, small);
    run.output(outp);
    outlist += p.filename().string();
    outlist += '\n';
    ++count;
  }
  atomic_write_bytes(run.out / "x_list.txt", outlist);
  run.output(run.out / "x_list.txt");
  run.finish();
  std::cout << "downsized " << count << " tensors to " << ranks_tag(target) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tucker tensor regression toolkit"};
  app.require_subcommand(1);
  const std::string cmdline = joined_argv(argc, argv);

  DfArgs df_args;
  auto* df_cmd = app.add_subcommand("df", "free-parameter counts for Tucker and CP models");
  df_cmd->add_option("--dims", df_args.dims, "tensor dimensions, e.g. 16,16,16")->required();
  df_cmd->add_option("--tucker-ranks", df_args.tucker_ranks, "Tucker orders, e.g. 5,3,3");
  df_cmd->add_option("--cp-rank", df_args.cp_rank, "CP rank");

  SimulateArgs sim_args;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a dataset or run a named protocol");
  sim_cmd->add_option("--protocol", sim_args.protocol,
                      "consistency | tucker-vs-cp | shape (desk-scale defaults)");
  sim_cmd->add_option("--signal", sim_args.signal,
                      "square|cross|disk|t-shape|triangle|butterfly|random-tucker|random-drank");
  sim_cmd->add_option("--dims", sim_args.dims, "tensor dimensions");
  sim_cmd->add_option("--ranks", sim_args.ranks, "signal ranks / Tucker orders");
  sim_cmd->add_option("--n", sim_args.n, "sample size");
  sim_cmd->add_option("--n-grid", sim_args.n_grid, "sample sizes for the consistency curve");
  sim_cmd->add_option("--reps", sim_args.reps, "replications");
  sim_cmd->add_option("--family", sim_args.family, "normal | bernoulli | poisson");
  sim_cmd->add_option("--noise", sim_args.noise, "unit | var10");
  sim_cmd->add_option("--shape", sim_args.shape, "shape for the shape protocol");
  sim_cmd->add_option("--orders", sim_args.orders, "TR orders for the shape protocol");
  sim_cmd->add_option("--gamma-len", sim_args.gamma_len, "length of the all-ones gamma");
  sim_cmd->add_option("--starts", sim_args.starts, "multi-start count");
  sim_cmd->add_option("--seed", sim_args.seed, "RNG seed");
  sim_cmd->add_option("--threads", sim_args.threads, "worker thread cap");
  sim_cmd->add_option("--out", sim_args.out, "output directory")->required();

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "fit a Tucker or CP tensor regression");
  fit_cmd->add_option("--y", fit_args.y, "response CSV")->required();
  fit_cmd->add_option("--x", fit_args.x, "tensor list file")->required();
  fit_cmd->add_option("--z", fit_args.z, "regular covariates CSV");
  fit_cmd->add_option("--ranks", fit_args.ranks, "Tucker orders, e.g. 2,2,2");
  fit_cmd->add_option("--candidates", fit_args.candidates,
                      "semicolon-separated rank tuples for BIC selection");
  fit_cmd->add_option("--cp-rank", fit_args.cp_rank, "CP rank (fixed superdiagonal core)");
  fit_cmd->add_option("--family", fit_args.family, "normal | bernoulli | poisson");
  fit_cmd->add_option("--dispersion", fit_args.dispersion, "normal dispersion phi");
  fit_cmd->add_option("--tol", fit_args.tol, "relative loglik tolerance");
  fit_cmd->add_option("--max-iter", fit_args.max_iter, "maximum block-relaxation cycles");
  fit_cmd->add_option("--starts", fit_args.starts, "multi-start count");
  fit_cmd->add_option("--penalty", fit_args.penalty,
                      "none|lasso|ridge|power|enet|scad|mcp (core penalty)");
  fit_cmd->add_option("--lambda", fit_args.lambda, "penalty tuning parameter");
  fit_cmd->add_option("--eta", fit_args.eta, "penalty shape parameter");
  fit_cmd->add_option("--tune", fit_args.tune, "cv5 | bic");
  fit_cmd->add_option("--lambda-grid", fit_args.lambda_grid, "comma-separated lambda grid");
  fit_cmd->add_option("--seed", fit_args.seed, "RNG seed");
  fit_cmd->add_option("--threads", fit_args.threads, "worker thread cap");
  fit_cmd->add_option("--out", fit_args.out, "output directory")->required();

  InferArgs infer_args;
  auto* infer_cmd = app.add_subcommand("infer", "standard errors and Wald statistics");
  infer_cmd->add_option("--y", infer_args.y, "response CSV")->required();
  infer_cmd->add_option("--x", infer_args.x, "tensor list file")->required();
  infer_cmd->add_option("--z", infer_args.z, "regular covariates CSV");
  infer_cmd->add_option("--coeff", infer_args.coeff, "coefficient container")->required();
  infer_cmd->add_option("--family", infer_args.family, "normal | bernoulli | poisson");
  infer_cmd->add_option("--dispersion", infer_args.dispersion, "normal dispersion phi");
  infer_cmd->add_flag("--full", infer_args.full,
                      "use the full parameterization instead of the restricted one");
  infer_cmd->add_option("--out", infer_args.out, "output directory")->required();

  DownsizeArgs down_args;
  auto* down_cmd = app.add_subcommand("downsize", "wavelet-downsize a list of tensors");
  down_cmd->add_option("--basis", down_args.basis, "haar | db4");
  down_cmd->add_option("--target", down_args.target, "target dimensions, e.g. 12,14,12")
      ->required();
  down_cmd->add_option("--in", down_args.in, "tensor list file")->required();
  down_cmd->add_option("--out", down_args.out, "output directory")->required();

  ProtocolArgs cmp_args;
  auto* cmp_cmd = app.add_subcommand("compare", "Tucker versus CP on d-rank signals");
  cmp_cmd->add_option("--dims", cmp_args.dims, "tensor dimensions");
  cmp_cmd->add_option("--dranks", cmp_args.ranks, "target d-ranks, e.g. 5,3,3");
  cmp_cmd->add_option("--n", cmp_args.n, "sample size");
  cmp_cmd->add_option("--reps", cmp_args.reps, "replications");
  cmp_cmd->add_option("--starts", cmp_args.starts, "multi-start count");
  cmp_cmd->add_option("--seed", cmp_args.seed, "RNG seed");
  cmp_cmd->add_option("--threads", cmp_args.threads, "worker thread cap");
  cmp_cmd->add_option("--out", cmp_args.out, "output directory")->required();

  ProtocolArgs bench_args;
  auto* bench_cmd = app.add_subcommand("benchmark", "replication protocols with result tables");
  bench_cmd->add_option("--protocol", bench_args.protocol, "consistency | tucker-vs-cp | shape")
      ->required();
  bench_cmd->add_option("--dims", bench_args.dims, "tensor dimensions");
  bench_cmd->add_option("--ranks", bench_args.ranks, "Tucker orders or d-ranks");
  bench_cmd->add_option("--n", bench_args.n, "sample size");
  bench_cmd->add_option("--n-grid", bench_args.n_grid, "sample sizes for the consistency curve");
  bench_cmd->add_option("--reps", bench_args.reps, "replications");
  bench_cmd->add_option("--family", bench_args.family, "normal | bernoulli | poisson");
  bench_cmd->add_option("--noise", bench_args.noise, "unit | var10");
  bench_cmd->add_option("--shape", bench_args.shape, "shape for the shape protocol");
  bench_cmd->add_option("--orders", bench_args.orders, "TR orders for the shape protocol");
  bench_cmd->add_option("--gamma-len", bench_args.gamma_len, "length of the all-ones gamma");
  bench_cmd->add_option("--starts", bench_args.starts, "multi-start count");
  bench_cmd->add_option("--seed", bench_args.seed, "RNG seed");
  bench_cmd->add_option("--threads", bench_args.threads, "worker thread cap");
  bench_cmd->add_option("--out", bench_args.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (df_cmd->parsed()) return run_df(df_args);
    if (sim_cmd->parsed()) return run_simulate(sim_args, cmdline);
    if (fit_cmd->parsed()) return run_fit(fit_args, cmdline);
    if (infer_cmd->parsed()) return run_infer(infer_args, cmdline);
    if (down_cmd->parsed()) return run_downsize(down_args, cmdline);
    if (cmp_cmd->parsed()) {
      cmp_args.protocol = "tucker-vs-cp";
      return run_protocol(cmp_args, cmdline, false);
    }
    if (bench_cmd->parsed()) return run_protocol(bench_args, cmdline, false);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
