#pragma once

#include <string>
#include <vector>

namespace msynth {

// Target (eps, delta)-DP guarantee for a whole run.
struct PrivacyParams {
  double epsilon = 1.0;
  double delta = 2.2e-12;

  void validate() const;  // InvalidParams unless eps > 0 and delta in (0,1)
};

// Renyi-DP charge with a linear curve gamma(alpha) = alpha * rho.
struct RdpEntry {
  std::string label;
  double rho = 0.0;
};

// Additive composition ledger. Every private touch of the data appends one
// entry; the total curve stays linear so conversion to (eps, delta)-DP has a
// closed form.
class RdpLedger {
 public:
  void charge(std::string label, double rho);
  double total_rho() const;
  double epsilon_at(double delta) const;
  const std::vector<RdpEntry>& entries() const { return entries_; }

 private:
  std::vector<RdpEntry> entries_;
};

// rho of a Gaussian release with the given noise scale and L2 sensitivity.
double gaussian_rho(double sigma, double l2_sens);

// rho of one exponential-mechanism draw with probabilities proportional to
// exp(eps_step * score) and the given score sensitivity.
double exponential_rho(double eps_step, double sens);

// (eps, delta) epsilon of a linear RDP curve at one Renyi order.
double rdp_to_dp_at_alpha(double rho, double alpha, double delta);

// Tight conversion: eps = rho + 2*sqrt(rho * ln(1/delta)).
double rdp_to_dp(double rho, double delta);

// Largest rho whose conversion stays within eps (exact in floating point:
// rdp_to_dp(calibrate_rho(eps, delta), delta) <= eps and no larger
// representable rho satisfies that).
double calibrate_rho(double eps, double delta);
double calibrate_rho(const PrivacyParams& params);

// Noise scale for a unit-L2-sensitivity release invoked `invocations` times
// under one (eps, delta) budget.
double calibrate_sigma(double eps, double delta, int invocations);
double calibrate_sigma(const PrivacyParams& params, int invocations);

double laplace_scale(double eps, double l1_sens);
double laplace_std(double eps, double l1_sens);

}  // namespace msynth
