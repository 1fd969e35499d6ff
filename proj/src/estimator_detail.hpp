#pragma once

// Internal machinery shared by estimator.cpp and regularization.cpp.

#include "tensorreg/estimator.hpp"
#include "tensorreg/regularization.hpp"

#include <vector>

namespace tensorreg::detail {

// All tensor covariates stacked into one order-(D+1) tensor with the
// observation index as the trailing mode, so the per-cycle design
// computations become a handful of large GEMMs instead of n small ones.
struct Stacked {
  DenseTensor t;
  Index n = 0;
  std::vector<Index> xdims;
};

Stacked stack(const Dataset& ds);

Matrix core_design(const Stacked& st, const std::vector<Matrix>& factors);
Matrix factor_design(const Stacked& st, const TuckerCoeff& coeff, Index d);

struct EngineConfig {
  const PenaltySpec* penalty = nullptr;
  bool update_core = true;
};

struct EngineOutcome {
  TuckerCoeff coeff;
  std::vector<double> trace;        // objective per cycle (incl. start)
  std::vector<double> block_trace;  // objective per block update
  double loglik = 0.0;              // unpenalized, family dispersion as given
  double objective = 0.0;           // loglik minus penalty
  bool converged = false;
};

EngineOutcome run_block_relaxation(const Stacked& st, const Dataset& ds, const FitOptions& opts,
                                   TuckerCoeff coeff, const EngineConfig& cfg);

EngineOutcome best_of_starts(const Stacked& st, const Dataset& ds, const FitOptions& opts,
                             const EngineConfig& cfg,
                             const std::vector<TuckerCoeff>& extra_inits, int* best_start);

FitResult finalize_fit(const Dataset& ds, const FitOptions& opts, EngineOutcome eo,
                       int best_start, Index cp_rank, bool do_canonicalize);

TuckerCoeff random_start(const Dataset& ds, const FitOptions& opts, const Vector& gamma0,
                         int start_index);

Vector null_gamma(const Dataset& ds, const GlmFamily& fam);

double profiled_loglik(const GlmFamily& fam, const Dataset& ds, double ll, double dev);

void check_ranks(const Dataset& ds, std::span<const Index> ranks);

}  // namespace tensorreg::detail
