#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcal/models.hpp"

namespace mcal {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;  // 1/sqrt(2 pi)

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

// Phi(z) / phi(z) for z <= -5 by the Laplace continued fraction of the Mills ratio.
double mills_ratio_lower_tail(double z) {
  const double x = -z;
  double t = x;
  for (int k = 80; k >= 1; --k) t = x + k / t;
  return 1.0 / t;
}

}  // namespace

double log_normal_cdf(double z) {
  if (z > -5.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
  return std::log(normal_pdf(0.0)) - 0.5 * z * z + std::log(mills_ratio_lower_tail(z));
}

double normal_hazard_ratio(double z) {
  if (z > -5.0) return normal_pdf(z) / (0.5 * std::erfc(-z / std::numbers::sqrt2));
  return 1.0 / mills_ratio_lower_tail(z);
}

LossDerivatives loss_derivatives(const LossModel& loss, double x, Label y) {
  const double g = loss.gamma;
  const double yd = static_cast<double>(y);
  switch (loss.family) {
    case Family::gr: {
      const double r = x - yd;
      return {0.5 * r * r / (g * g), r / (g * g), 1.0 / (g * g)};
    }
    case Family::logistic: {
      const double a = x * yd / g;
      // s = 1 / (1 + e^{a}), evaluated without overflow.
      const double s = a >= 0.0 ? std::exp(-a) / (1.0 + std::exp(-a)) : 1.0 / (1.0 + std::exp(a));
      const double value = std::max(-a, 0.0) + std::log1p(std::exp(-std::abs(a)));
      return {value, -yd * s / g, s * (1.0 - s) / (g * g)};
    }
    case Family::probit: {
      const double t = x * yd;
      const double r = normal_hazard_ratio(t / g) / g;  // psi_gamma(t) / Psi_gamma(t)
      return {-log_normal_cdf(t / g), -yd * r, r * r + t * r / (g * g)};
    }
    case Family::mgr:
    case Family::ce:
      break;
  }
  throw std::invalid_argument("loss_derivatives requires a binary family");
}

}  // namespace mcal
