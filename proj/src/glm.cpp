#include "tensorreg/glm.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tensorreg {

namespace {

constexpr double kProbClamp = 1e-10;

double log1pexp(double x) {
  // ln(1 + e^x), overflow-safe
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace

FamilyEval family_eval(const GlmFamily& f, const Vector& eta) {
  if (!eta.allFinite()) throw std::invalid_argument("family_eval: non-finite linear predictor");
  const Index n = eta.size();
  FamilyEval ev{Vector(n), Vector(n), Vector(n)};
  switch (f.kind) {
    case Family::normal:
      ev.mu = eta;
      ev.mu_prime.setOnes();
      ev.variance.setConstant(f.dispersion);
      break;
    case Family::bernoulli:
      for (Index i = 0; i < n; ++i) {
        const double m = 1.0 / (1.0 + std::exp(-eta[i]));
        ev.mu[i] = m;
        ev.mu_prime[i] = m * (1.0 - m);
        ev.variance[i] = m * (1.0 - m);
      }
      break;
    case Family::poisson:
      for (Index i = 0; i < n; ++i) {
        const double m = std::exp(eta[i]);
        ev.mu[i] = m;
        ev.mu_prime[i] = m;
        ev.variance[i] = m;
      }
      break;
  }
  return ev;
}

void validate_response(const GlmFamily& f, const Vector& y) {
  switch (f.kind) {
    case Family::normal:
      if (!y.allFinite()) throw std::invalid_argument("normal response must be finite");
      break;
    case Family::bernoulli:
      for (Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0)
          throw std::invalid_argument("bernoulli response must be 0 or 1 (row " +
                                      std::to_string(i) + ")");
      break;
    case Family::poisson:
      for (Index i = 0; i < y.size(); ++i)
        if (y[i] < 0.0 || y[i] != std::floor(y[i]))
          throw std::invalid_argument("poisson response must be a nonnegative integer (row " +
                                      std::to_string(i) + ")");
      break;
  }
}

double loglik(const GlmFamily& f, const Vector& y, const Vector& eta) {
  if (y.size() != eta.size()) throw std::invalid_argument("loglik: length mismatch");
  const Index n = y.size();
  double ll = 0.0;
  switch (f.kind) {
    case Family::normal: {
      const double rss = (y - eta).squaredNorm();
      ll = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi * f.dispersion) +
                   rss / f.dispersion);
      break;
    }
    case Family::bernoulli:
      for (Index i = 0; i < n; ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
      break;
    case Family::poisson:
      for (Index i = 0; i < n; ++i)
        ll += y[i] * eta[i] - std::exp(eta[i]) - std::lgamma(y[i] + 1.0);
      break;
  }
  return ll;
}

double deviance(const GlmFamily& f, const Vector& y, const Vector& eta) {
  if (y.size() != eta.size()) throw std::invalid_argument("deviance: length mismatch");
  validate_response(f, y);
  const Index n = y.size();
  double dev = 0.0;
  switch (f.kind) {
    case Family::normal:
      dev = (y - eta).squaredNorm();
      break;
    case Family::bernoulli:
      for (Index i = 0; i < n; ++i) dev += 2.0 * (log1pexp(eta[i]) - y[i] * eta[i]);
      break;
    case Family::poisson:
      for (Index i = 0; i < n; ++i) {
        const double mu = std::exp(eta[i]);
        const double ylogy = y[i] > 0 ? y[i] * std::log(y[i] / mu) : y[i] * -eta[i];
        dev += 2.0 * (ylogy - (y[i] - mu));
      }
      break;
  }
  return dev;
}

GlmFit irls_fit(const Matrix& design, const Vector& y, const GlmFamily& f,
                const Vector& offset, int max_iter, double tol, const Vector& init) {
  const Index n = y.size();
  const Index q = design.cols();
  if (design.rows() != n) throw std::invalid_argument("irls_fit: design/response length mismatch");
  if (offset.size() != 0 && offset.size() != n)
    throw std::invalid_argument("irls_fit: offset length mismatch");
  validate_response(f, y);

  const Vector off = offset.size() ? offset : Vector::Zero(n);
  GlmFit fit;
  fit.coef = init.size() ? init : Vector::Zero(q);
  if (init.size() && init.size() != q)
    throw std::invalid_argument("irls_fit: init length mismatch");

  Vector eta = design * fit.coef + off;
  double ll = loglik(f, y, eta);

  for (int iter = 1; iter <= max_iter; ++iter) {
    fit.iterations = iter;
    FamilyEval ev = family_eval(f, eta);
    Vector w(n), z(n);
    for (Index i = 0; i < n; ++i) {
      double mp = ev.mu_prime[i];
      double var = ev.variance[i];
      if (f.kind == Family::bernoulli) {
        // Clamp fitted probabilities so separable data cannot zero the weights.
        const double m = std::min(std::max(ev.mu[i], kProbClamp), 1.0 - kProbClamp);
        mp = m * (1.0 - m);
        var = mp;
      } else if (f.kind == Family::poisson) {
        mp = std::max(mp, kProbClamp);
        var = mp;
      }
      w[i] = mp * mp / var;
      z[i] = eta[i] - off[i] + (y[i] - ev.mu[i]) / mp;
    }

    const Vector sw = w.cwiseSqrt();
    Matrix wx = sw.asDiagonal() * design;
    Eigen::ColPivHouseholderQR<Matrix> qr(wx);
    if (qr.rank() < q)
      throw std::runtime_error("irls_fit: singular design (rank " + std::to_string(qr.rank()) +
                               " of " + std::to_string(q) + " columns)");
    Vector target = qr.solve(sw.asDiagonal() * z);

    // Step-halving keeps the loglik nondecreasing.
    Vector delta = target - fit.coef;
    double step = 1.0;
    Vector cand;
    double ll_new = -std::numeric_limits<double>::infinity();
    for (int h = 0; h < 40; ++h) {
      cand = fit.coef + step * delta;
      Vector eta_cand = design * cand + off;
      ll_new = loglik(f, y, eta_cand);
      if (std::isfinite(ll_new) && ll_new >= ll - 1e-12 * (1.0 + std::abs(ll))) {
        eta = std::move(eta_cand);
        break;
      }
      step *= 0.5;
    }
    if (!std::isfinite(ll_new)) {
      fit.converged = false;
      break;
    }
    fit.coef = cand;
    const double gain = ll_new - ll;
    ll = ll_new;
    if (std::abs(gain) < tol * (1.0 + std::abs(ll))) {
      fit.converged = true;
      break;
    }
  }
  fit.loglik = ll;
  fit.deviance = deviance(f, y, eta);
  return fit;
}

}  // namespace tensorreg
