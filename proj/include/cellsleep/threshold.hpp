#pragma once

// Online QoS threshold Q_tau = theta0 + theta1 * Hbar, fitted toward an
// adaptive target that overshoots whenever observed QoS has lagged behind.

#include <algorithm>
#include <array>
#include <cmath>

namespace cellsleep {

struct ThresholdModel {
  double theta0 = 85.0;
  double theta1 = 1.0;
  double gamma = 0.001;
  double qos_target = 92.0;  // Q_Phi
  double theta0_lo = 80.0, theta0_hi = 90.0;
  double theta1_lo = 0.0, theta1_hi = 3.0;
  int max_iterations = 100;
  double tolerance = 1e-12;  // projected-gradient stop, relative
  double qos_sum = 0.0;
  long qos_count = 0;

  double threshold(double hbar) const { return std::clamp(theta0 + theta1 * hbar, 0.0, 100.0); }
  void record_qos(double q) {
    qos_sum += q;
    ++qos_count;
  }
  double mean_qos() const { return qos_count ? qos_sum / static_cast<double>(qos_count) : qos_target; }
};

// Q_phi = Q_Phi + (Q_Phi - mean observed QoS)
inline double adaptive_target(const ThresholdModel& m) { return 2.0 * m.qos_target - m.mean_qos(); }

inline double threshold_loss(const ThresholdModel& m, double theta0, double theta1, double qphi, double hbar) {
  const double r = qphi - theta0 - theta1 * hbar;
  return r * r + m.gamma * (theta0 * theta0 + theta1 * theta1);
}

// Minimizes the regularized squared gap over the box with an active-set
// Newton method: coordinates sitting on a bound with the gradient pushing
// outward are held fixed, the Newton system is solved on the rest, and the
// step is cut at the first bound it reaches. The loss is a convex quadratic,
// so each step decreases it and the iteration ends once the projected
// gradient vanishes. Returns the new Q_tau.
inline double update_threshold(ThresholdModel& m, double qphi, double hbar) {
  const std::array<double, 2> lo{m.theta0_lo, m.theta1_lo};
  const std::array<double, 2> hi{m.theta0_hi, m.theta1_hi};
  std::array<double, 2> th{std::clamp(m.theta0, lo[0], hi[0]), std::clamp(m.theta1, lo[1], hi[1])};
  const double h00 = 2.0 * (1.0 + m.gamma);
  const double h01 = 2.0 * hbar;
  const double h11 = 2.0 * (hbar * hbar + m.gamma);
  const double gscale = 1.0 + std::abs(qphi) * (1.0 + hbar);

  for (int it = 0; it < m.max_iterations; ++it) {
    const double r = qphi - th[0] - th[1] * hbar;
    const std::array<double, 2> g{-2.0 * r + 2.0 * m.gamma * th[0], -2.0 * r * hbar + 2.0 * m.gamma * th[1]};
    std::array<bool, 2> fixed{};
    double pg = 0.0;
    for (int i = 0; i < 2; ++i) {
      fixed[i] = (th[i] <= lo[i] && g[i] > 0.0) || (th[i] >= hi[i] && g[i] < 0.0);
      if (!fixed[i]) pg = std::max(pg, std::abs(g[i]));
    }
    if (pg <= m.tolerance * gscale) break;

    // a coordinate on its bound whose Newton step points out of the box is
    // pinned for this iteration and the reduced problem solved again
    for (int pass = 0; pass < 2; ++pass) {
      std::array<double, 2> d{0.0, 0.0};
      const double det = h00 * h11 - h01 * h01;
      if (!fixed[0] && !fixed[1] && det > 1e-12 * std::max(1.0, h00 * h11)) {
        d[0] = -(h11 * g[0] - h01 * g[1]) / det;
        d[1] = -(-h01 * g[0] + h00 * g[1]) / det;
      } else if (!fixed[0] && !fixed[1]) {
        // singular Hessian (gamma = 0): exact line search along the gradient
        const double ghg = g[0] * g[0] * h00 + 2.0 * g[0] * g[1] * h01 + g[1] * g[1] * h11;
        const double a = ghg > 0.0 ? (g[0] * g[0] + g[1] * g[1]) / ghg : 0.0;
        d = {-a * g[0], -a * g[1]};
      } else if (!fixed[0]) {
        d[0] = -g[0] / h00;
      } else if (!fixed[1] && h11 > 0.0) {
        d[1] = -g[1] / h11;
      }

      int blocked = -1;
      for (int i = 0; i < 2; ++i)
        if ((d[i] > 0.0 && th[i] >= hi[i]) || (d[i] < 0.0 && th[i] <= lo[i])) blocked = i;
      if (blocked >= 0 && pass == 0) {
        fixed[blocked] = true;
        continue;
      }

      // longest step in (0, 1] that stays inside the box
      double alpha = 1.0;
      int hit = -1;
      for (int i = 0; i < 2; ++i) {
        double a = 1.0;
        if (d[i] > 0.0 && th[i] + d[i] > hi[i]) a = (hi[i] - th[i]) / d[i];
        if (d[i] < 0.0 && th[i] + d[i] < lo[i]) a = (lo[i] - th[i]) / d[i];
        if (a < alpha) {
          alpha = a;
          hit = i;
        }
      }
      const auto before = th;
      for (int i = 0; i < 2; ++i) th[i] = std::clamp(th[i] + alpha * d[i], lo[i], hi[i]);
      if (hit >= 0) th[hit] = d[hit] > 0.0 ? hi[hit] : lo[hit];
      if (th == before) it = m.max_iterations;
      break;
    }
  }
  m.theta0 = th[0];
  m.theta1 = th[1];
  return m.threshold(hbar);
}

}  // namespace cellsleep
