#pragma once

#include "tensorreg/tensor.hpp"

namespace tensorreg {

enum class Family { normal, bernoulli, poisson };

/// Exponential-family response with its canonical link (identity, logit,
/// log). dispersion is the normal variance phi; it is 1 for the others.
struct GlmFamily {
  Family kind = Family::normal;
  double dispersion = 1.0;
};

struct FamilyEval {
  Vector mu;        // mean E[Y|eta]
  Vector mu_prime;  // d mu / d eta
  Vector variance;  // Var[Y|eta]
};

/// Mean, mean derivative and variance at a linear predictor. Throws on
/// non-finite eta.
FamilyEval family_eval(const GlmFamily& f, const Vector& eta);

/// Throws if y is invalid for the family (bernoulli y in {0,1}, poisson y a
/// nonnegative integer).
void validate_response(const GlmFamily& f, const Vector& y);

double loglik(const GlmFamily& f, const Vector& y, const Vector& eta);

/// 2*(saturated loglik - loglik). For the normal family this is the residual
/// sum of squares (dispersion-free, matching the usual GLM convention).
double deviance(const GlmFamily& f, const Vector& y, const Vector& eta);

struct GlmFit {
  Vector coef;
  double loglik = 0.0;
  double deviance = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Maximum-likelihood GLM fit by iteratively reweighted least squares with
/// step-halving, so the log-likelihood never decreases across iterations.
/// eta = design*coef + offset. Starts from `init` when given (must match the
/// column count), otherwise from zero. Throws on a rank-deficient design;
/// a non-finite log-likelihood is reported as converged=false.
GlmFit irls_fit(const Matrix& design, const Vector& y, const GlmFamily& f,
                const Vector& offset, int max_iter = 100, double tol = 1e-10,
                const Vector& init = Vector());

}  // namespace tensorreg
