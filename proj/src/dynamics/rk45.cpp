#include <algorithm>
#include <cmath>

#include "volcon/dynamics.hpp"
#include "volcon/errors.hpp"

namespace volcon::dynamics {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// Difference between the 5th- and 4th-order weights.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;

double error_norm(const State& err, const State& y0, const State& y1, const Rk45Options& o) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double scale = o.abs_tol + o.rel_tol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    worst = std::max(worst, std::abs(err[i]) / scale);
  }
  return worst;
}

// Starting step from the size of y and of its derivative (Hairer, Norsett, Wanner).
double initial_step(const Rhs& rhs, double t0, const State& y0, const State& f0,
                    const Rk45Options& o, std::size_t& evaluations) {
  auto scaled = [&](const State& v) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double s = o.abs_tol + o.rel_tol * std::abs(y0[i]);
      sum += (v[i] / s) * (v[i] / s);
    }
    return v.size() > 0 ? std::sqrt(sum / static_cast<double>(v.size())) : 0.0;
  };
  const double d0 = scaled(y0);
  const double d1 = scaled(f0);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, o.h_max);
  const State y1 = y0 + h0 * f0;
  State f1(y0.size());
  rhs(t0 + h0, y1, f1);
  ++evaluations;
  const double d2 = scaled(f1 - f0) / h0;
  const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                              : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
  return std::min({100.0 * h0, h1, o.h_max});
}

}  // namespace

Rk45Result rk45_integrate(const Rhs& rhs, const State& y0, double t0, double t1,
                          const Rk45Options& o) {
  if (!(o.rel_tol > 0.0) || !(o.abs_tol > 0.0) || !(o.h_max > 0.0)) {
    throw ParameterError("integrator tolerances and h_max must be strictly positive");
  }
  if (t1 < t0) throw ParameterError("integration end precedes start");

  Rk45Result result;
  result.samples.push_back({t0, y0});
  if (t1 == t0) {
    result.h_next = o.h_initial > 0.0 ? o.h_initial : o.h_max;
    return result;
  }

  const Eigen::Index n = y0.size();
  State y = y0;
  State k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n), err(n);
  rhs(t0, y, k1);
  ++result.evaluations;

  double h = o.h_initial > 0.0 ? std::min(o.h_initial, o.h_max)
                               : initial_step(rhs, t0, y, k1, o, result.evaluations);
  double t = t0;
  bool last_rejected = false;
  const double span = t1 - t0;

  while (t < t1) {
    // Stretch the final step rather than leave a sliver shorter than roundoff.
    bool final_step = false;
    double step = h;
    if (t + step >= t1 - 1e-12 * span) {
      step = t1 - t;
      final_step = true;
    }
    if (step < o.h_min && !final_step) throw IntegrationError("step size underflow", t);

    tmp = y + step * (a21 * k1);
    rhs(t + c2 * step, tmp, k2);
    tmp = y + step * (a31 * k1 + a32 * k2);
    rhs(t + c3 * step, tmp, k3);
    tmp = y + step * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * step, tmp, k4);
    tmp = y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * step, tmp, k5);
    tmp = y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + step, tmp, k6);
    y_new = y + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double t_new = final_step ? t1 : t + step;
    rhs(t_new, y_new, k7);
    result.evaluations += 6;

    err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double norm = error_norm(err, y, y_new, o);

    if (norm <= 1.0) {
      t = t_new;
      y = y_new;
      // The hook only removes roundoff-level drift, so the last stage is still
      // a valid first stage for the next step.
      if (o.post_step) o.post_step(y);
      k1 = k7;
      ++result.accepted;
      if (o.record_steps || t >= t1) result.samples.push_back({t, y});
      double factor = norm == 0.0 ? kMaxFactor : kSafety * std::pow(norm, -0.2);
      factor = std::clamp(factor, kMinFactor, last_rejected ? 1.0 : kMaxFactor);
      // A shortened final step says nothing about the step the dynamics allow.
      const double basis = final_step ? std::max(h, step) : step;
      h = std::min(basis * factor, o.h_max);
      last_rejected = false;
    } else {
      ++result.rejected;
      const double factor = std::isfinite(norm)
                                ? std::clamp(kSafety * std::pow(norm, -0.2), kMinFactor, 1.0)
                                : kMinFactor;
      h = step * factor;
      last_rejected = true;
      if (h < o.h_min) throw IntegrationError("step size underflow", t);
    }
  }
  result.h_next = h;
  return result;
}

}  // namespace volcon::dynamics
