#pragma once

#include "tensorreg/estimator.hpp"

#include <vector>

namespace tensorreg {

enum class PenaltyFamily { power, lasso, ridge, elastic_net, scad, mcp };

/// Scalar penalty P_eta(|x|, lambda) applied to every core entry.
/// Shape-parameter ranges: power eta in (0,2], elastic_net eta in [1,2],
/// scad eta > 2, mcp eta > 0 (lasso/ridge take no shape parameter).
struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::lasso;
  double lambda = 0.0;
  double eta = 1.0;

  void validate() const;
  static double default_eta(PenaltyFamily f);
};

double penalty_value(const PenaltySpec& p, double x);

/// Exact scalar minimizer of 0.5*a*(g - z)^2 + P_eta(|g|, lambda) over g.
/// Closed forms for lasso/ridge/elastic-net/SCAD/MC+; the power family with
/// eta not in {1,2} uses a safeguarded Newton iteration on the stationarity
/// equation.
double threshold(const PenaltySpec& p, double z, double a);

/// Penalized block relaxation: identical cycle to fit_tucker except the core
/// update maximizes loglik - sum P(|g|) by cyclic coordinate descent (one
/// sweep per cycle), and after every factor update the columns of B_d are
/// rescaled to unit norm with the inverse scales absorbed into the core.
/// The penalized objective is nondecreasing across block updates.
FitResult fit_tucker_regularized(const Dataset& ds, const FitOptions& opts,
                                 const PenaltySpec& penalty);

enum class TuneMethod { cv5, bic };

struct TuneRow {
  double lambda = 0.0;
  double score = 0.0;  // mean held-out deviance (cv5) or BIC
  Index nonzero_core = 0;
};

struct TuneResult {
  double best_lambda = 0.0;
  std::size_t best_index = 0;
  std::vector<TuneRow> table;
};

/// Tuning-parameter selection over a lambda grid. cv5: deterministic 5-fold
/// assignment from a seeded shuffle, score = mean held-out deviance. bic:
/// full-data penalized fit with df = nnz(core) + sum p_d R_d - sum R_d^2 +
/// |gamma|. Returns the argmin (ties toward the larger, sparser lambda).
TuneResult tune_lambda(const Dataset& ds, const FitOptions& opts, const PenaltySpec& base,
                       const std::vector<double>& grid, TuneMethod method);

}  // namespace tensorreg
