#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "volcon/contact.hpp"
#include "volcon/errors.hpp"

namespace volcon::contact {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ParameterError(std::string(name) + " must be strictly positive");
  }
}

}  // namespace

void ContactParams::validate() const {
  require_positive(g1, "g1");
  require_positive(g2, "g2");
  require_positive(g_i, "g_i");
  require_positive(g_t, "g_t");
  require_positive(d_t, "d_t");
  require_positive(zeta, "zeta");
  require_positive(omega_n, "omega_n");
}

void FrictionParams::validate() const {
  if (!(mu >= 0.0)) throw ParameterError("mu must be non-negative");
  if (!(beta >= 0.0)) throw ParameterError("beta must be non-negative");
  require_positive(gamma, "gamma");
}

FilterDerivative filter_rhs(const FilterState& state, double v, double zeta, double omega_n) {
  return {state.v_f_dot,
          -2.0 * zeta * omega_n * state.v_f_dot + omega_n * omega_n * (v - state.v_f)};
}

FilterState init_filter(double v0) {
  if (v0 < 0.0) throw ParameterError("initial filter volume must be non-negative");
  return {v0, 0.0};
}

double relative_contact_speed(const VelocityField& a, const VelocityField& b, const Vec3& c,
                              const Vec3& s_n) {
  return (b.at(c) - a.at(c)).dot(s_n);
}

TransientGain transient_gain_terms(double t, const ContactEpisode& episode,
                                   const ContactParams& params, double m_a, double m_b) {
  TransientGain g;
  const double dv = std::max(episode.dv_c0, kMinImpactSpeed);
  g.i_v = params.g_i * (m_a + m_b) * dv;
  g.d_v = params.d_t / dv;
  g.t_peak = episode.t_c + params.g_t * g.d_v;
  const double s = (t - g.t_peak) / g.d_v;
  g.delta_i = g.i_v / (std::sqrt(std::numbers::pi) * g.d_v) * std::exp(-s * s);
  g.delta_eff = 1.0 + g.delta_i;
  return g;
}

double transient_gain(double t, const ContactEpisode& episode, const ContactParams& params,
                      double m_a, double m_b) {
  return transient_gain_terms(t, episode, params, m_a, m_b).delta_eff;
}

double reaction_magnitude(double v, double v_f_dot, double delta_eff, const ContactParams& params) {
  // Contacts push only; a fast separation must not turn the damper adhesive.
  return std::max(0.0, delta_eff * (params.g1 * v + params.g2 * v_f_dot));
}

Wrench reaction_wrench(const mesh::OverlapResult& overlap, const FilterState& filter,
                       double delta_eff, const ContactParams& params, const Vec3& p_o) {
  Wrench w;
  w.force = reaction_magnitude(overlap.v, filter.v_f_dot, delta_eff, params) * overlap.s_n;
  w.torque = (overlap.c - p_o).cross(w.force);
  return w;
}

Vec3 friction_force(const Vec3& f_n, const Vec3& v_r, const FrictionParams& params) {
  const double speed = v_r.norm();
  if (speed < kMinSlidingSpeed) return Vec3::Zero();
  const double magnitude =
      params.mu * f_n.norm() * std::tanh(params.gamma * speed) + params.beta * speed;
  return -magnitude * (v_r / speed);
}

EpisodeTable update_episodes(const EpisodeTable& episodes,
                             std::span<const DetectedOverlap> overlaps, double t) {
  EpisodeTable next;
  for (const auto& o : overlaps) {
    if (auto it = episodes.find(o.pair); it != episodes.end() && it->second.active) {
      next.emplace(o.pair, it->second);
      continue;
    }
    ContactEpisode e;
    e.pair = o.pair;
    e.t_c = t;
    e.dv_c0 = std::max(o.approach_speed, kMinImpactSpeed);
    e.filter = init_filter(o.v);
    e.active = true;
    next.emplace(o.pair, e);
  }
  return next;
}

}  // namespace volcon::contact
