#include "msynth/accountant.hpp"

#include <cmath>
#include <limits>

#include "msynth/errors.hpp"

namespace msynth {

namespace {

void check_delta(double delta) {
  if (!(delta > 0.0) || !(delta < 1.0))
    throw InvalidDelta("delta must be in (0, 1), got " +
                       std::to_string(delta));
}

void check_positive(double x, const char* name) {
  if (!(x > 0.0))
    throw NonPositiveParameter(std::string(name) + " must be > 0");
}

}  // namespace

void PrivacyParams::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw InvalidParams("epsilon must be positive, got " +
                        std::to_string(epsilon));
  if (!(delta > 0.0) || !(delta < 1.0))
    throw InvalidParams("delta must be in (0, 1), got " +
                        std::to_string(delta));
}

void RdpLedger::charge(std::string label, double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho))
    throw NonPositiveParameter("ledger charge must be finite and >= 0");
  entries_.push_back(RdpEntry{std::move(label), rho});
}

double RdpLedger::total_rho() const {
  double t = 0.0;
  for (const auto& e : entries_) t += e.rho;
  return t;
}

double RdpLedger::epsilon_at(double delta) const {
  return rdp_to_dp(total_rho(), delta);
}

double gaussian_rho(double sigma, double l2_sens) {
  check_positive(sigma, "sigma");
  check_positive(l2_sens, "l2_sens");
  return l2_sens * l2_sens / (2.0 * sigma * sigma);
}

double exponential_rho(double eps_step, double sens) {
  check_positive(eps_step, "eps_step");
  check_positive(sens, "sens");
  double r = 2.0 * eps_step * sens;
  return r * r / 8.0;
}

double rdp_to_dp_at_alpha(double rho, double alpha, double delta) {
  check_delta(delta);
  if (!(alpha > 1.0)) throw NonPositiveParameter("alpha must be > 1");
  return alpha * rho + std::log(1.0 / delta) / (alpha - 1.0);
}

double rdp_to_dp(double rho, double delta) {
  check_delta(delta);
  if (!(rho >= 0.0)) throw NonPositiveParameter("rho must be >= 0");
  if (rho == 0.0) return 0.0;
  double l = std::log(1.0 / delta);
  return rho + 2.0 * std::sqrt(rho * l);
}

double calibrate_rho(double eps, double delta) {
  PrivacyParams{eps, delta}.validate();
  double l = std::log(1.0 / delta);
  double root = std::sqrt(l + eps) - std::sqrt(l);
  double rho = root * root;
  // Closed form is exact in real arithmetic; settle float rounding so the
  // result is the largest representable rho still inside the budget.
  while (rho > 0.0 && rdp_to_dp(rho, delta) > eps)
    rho = std::nextafter(rho, 0.0);
  for (;;) {
    double up = std::nextafter(rho, std::numeric_limits<double>::infinity());
    if (rdp_to_dp(up, delta) > eps) break;
    rho = up;
  }
  return rho;
}

double calibrate_sigma(double eps, double delta, int invocations) {
  PrivacyParams{eps, delta}.validate();
  if (invocations <= 0) throw InvalidParams("invocations must be positive");
  double l = std::log(1.0 / delta);
  double sigma = std::sqrt(invocations / 2.0) *
                 (std::sqrt(l) + std::sqrt(l + eps)) / eps;
  while (rdp_to_dp(invocations * gaussian_rho(sigma, 1.0), delta) > eps)
    sigma = std::nextafter(sigma, std::numeric_limits<double>::infinity());
  return sigma;
}

double calibrate_rho(const PrivacyParams& params) {
  return calibrate_rho(params.epsilon, params.delta);
}

double calibrate_sigma(const PrivacyParams& params, int invocations) {
  return calibrate_sigma(params.epsilon, params.delta, invocations);
}

double laplace_scale(double eps, double l1_sens) {
  check_positive(eps, "eps");
  check_positive(l1_sens, "l1_sens");
  return l1_sens / eps;
}

double laplace_std(double eps, double l1_sens) {
  return std::sqrt(2.0) * laplace_scale(eps, l1_sens);
}

}  // namespace msynth
