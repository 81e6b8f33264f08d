#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace sasmate::numerics {

/// Gauss-Legendre nodes/weights mapped onto [0, 1]. Weights sum to 1.
template <int N>
struct GaussLegendre {
  static_assert(N >= 2);
  std::array<double, N> nodes{};
  std::array<double, N> weights{};

  GaussLegendre() {
    // Newton iteration on P_N starting from the Chebyshev-like guess.
    for (int i = 0; i < (N + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= N; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = N * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      // map [-1, 1] -> [0, 1]
      nodes[i] = 0.5 * (1.0 - x);
      nodes[N - 1 - i] = 0.5 * (1.0 + x);
      weights[i] = 0.5 * w;
      weights[N - 1 - i] = 0.5 * w;
    }
  }

  static const GaussLegendre& instance() {
    static const GaussLegendre rule;
    return rule;
  }

  template <typename F>
  double integrate(F&& f) const {
    double sum = 0.0;
    for (int i = 0; i < N; ++i) sum += weights[i] * f(nodes[i]);
    return sum;
  }
};

inline constexpr int kOrientationPoints = 76;

inline constexpr double kSphereSeriesThreshold = 1e-2;
inline constexpr double kSincSeriesThreshold = 1e-4;

/// Sphere amplitude 3(sin x - x cos x)/x^3, series below 1e-2.
inline double sphere_kernel(double x) {
  if (std::abs(x) < kSphereSeriesThreshold) {
    const double x2 = x * x;
    return 1.0 - x2 / 10.0 + x2 * x2 / 280.0;
  }
  return 3.0 * (std::sin(x) - x * std::cos(x)) / (x * x * x);
}

inline double sinc(double x) {
  if (std::abs(x) < kSincSeriesThreshold) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

/// Bessel J1 from the Abramowitz & Stegun rational approximations 9.4.4 and
/// 9.4.6 (absolute error below 1e-7).
inline double bessel_j1(double x) {
  const double ax = std::abs(x);
  if (ax <= 3.0) {
    const double y = (x / 3.0) * (x / 3.0);
    const double over_x = 0.5 + y * (-0.56249985 + y * (0.21093573 + y * (-0.03954289 +
                          y * (0.00443319 + y * (-0.00031761 + y * 0.00001109)))));
    return x * over_x;
  }
  const double y = 3.0 / ax;
  const double f1 = 0.79788456 + y * (0.00000156 + y * (0.01659667 + y * (0.00017105 +
                    y * (-0.00249511 + y * (0.00113653 + y * -0.00020033)))));
  const double theta = ax - 2.35619449 + y * (0.12499612 + y * (0.00005650 + y * (-0.00637879 +
                       y * (0.00074348 + y * (0.00079824 + y * -0.00029166)))));
  const double j = f1 * std::cos(theta) / std::sqrt(ax);
  return x < 0.0 ? -j : j;
}

/// 2 J1(x) / x, finite at x = 0.
inline double bessel_j1_ratio(double x) {
  const double ax = std::abs(x);
  if (ax <= 3.0) {
    const double y = (x / 3.0) * (x / 3.0);
    return 2.0 * (0.5 + y * (-0.56249985 + y * (0.21093573 + y * (-0.03954289 +
                  y * (0.00443319 + y * (-0.00031761 + y * 0.00001109))))));
  }
  return 2.0 * bessel_j1(ax) / ax;
}

}  // namespace sasmate::numerics
