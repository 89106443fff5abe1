#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "volcon/contact.hpp"
#include "volcon/dynamics.hpp"
#include "volcon/errors.hpp"

using namespace volcon;
using namespace volcon::contact;

namespace {

ContactParams baseline_params() {
  ContactParams p;
  p.g1 = 2.96e7;
  p.g2 = 2.0e6;
  p.g_i = 250.0;
  p.g_t = 1.0;
  p.d_t = 0.002;
  return p;
}

// Integrates the filter driven by input(t) with the adaptive integrator.
std::vector<dynamics::Rk45Sample> run_filter(FilterState s0, double zeta, double omega_n,
                                             double t1, double (*input)(double),
                                             double h_max = 1e-3) {
  const dynamics::Rhs rhs = [&](double t, const dynamics::State& y, dynamics::State& dy) {
    const auto d = filter_rhs({y[0], y[1]}, input(t), zeta, omega_n);
    dy[0] = d.d_v_f;
    dy[1] = d.d_v_f_dot;
  };
  dynamics::State y0(2);
  y0 << s0.v_f, s0.v_f_dot;
  dynamics::Rk45Options o;
  o.rel_tol = 1e-10;
  o.abs_tol = 1e-14;
  o.h_max = h_max;
  return dynamics::rk45_integrate(rhs, y0, 0.0, t1, o).samples;
}

ContactEpisode episode_at(double t_c, double dv) {
  ContactEpisode e;
  e.t_c = t_c;
  e.dv_c0 = dv;
  return e;
}

mesh::OverlapResult overlap_with(double v, const Vec3& c, const Vec3& s_n) {
  mesh::OverlapResult o;
  o.v = v;
  o.c = c;
  o.s_n = s_n;
  o.s_d = s_n;
  return o;
}

}  // namespace

TEST_SUITE("contact") {

TEST_CASE("parameter validation rejects non-positive gains") {
  CHECK_NOTHROW(baseline_params().validate());
  for (double ContactParams::*field : {&ContactParams::g1, &ContactParams::g2, &ContactParams::g_i,
                                       &ContactParams::g_t, &ContactParams::d_t,
                                       &ContactParams::zeta, &ContactParams::omega_n}) {
    ContactParams p = baseline_params();
    p.*field = 0.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
  }
  FrictionParams f{0.2, 0.2, 1.0};
  CHECK_NOTHROW(f.validate());
  f.gamma = 0.0;
  CHECK_THROWS_AS(f.validate(), ParameterError);
  f = {-0.1, 0.2, 1.0};
  CHECK_THROWS_AS(f.validate(), ParameterError);
}

TEST_CASE("filter right-hand side") {
  const auto fixed = filter_rhs({3e-7, 0.0}, 3e-7, 1.0, 3141.6);
  CHECK(fixed.d_v_f == 0.0);
  CHECK(fixed.d_v_f_dot == 0.0);

  const auto step = filter_rhs({0.0, 0.0}, 1.0, 1.0, 10.0);
  CHECK(step.d_v_f == 0.0);
  CHECK(step.d_v_f_dot == doctest::Approx(100.0));
}

TEST_CASE("filter initialization") {
  CHECK(init_filter(0.0).v_f == 0.0);
  CHECK(init_filter(1e-6).v_f == 1e-6);
  CHECK(init_filter(1e-6).v_f_dot == 0.0);
  const FilterState s = init_filter(2.5e-7);
  const auto d = filter_rhs(s, 2.5e-7, 1.0, 100.0);
  CHECK(d.d_v_f == 0.0);
  CHECK(d.d_v_f_dot == 0.0);
  CHECK_THROWS_AS(init_filter(-1e-9), ParameterError);
}

TEST_CASE("filter converges to a constant input") {
  // Critically damped error: e(t) = (e0 + (e0_dot + w e0) t) exp(-w t).
  const double omega_n = 200.0;
  const double target = 1e-4;
  const double e0 = -target;
  const double e0_dot = 5e-5;
  const auto samples = run_filter({0.0, e0_dot}, 1.0, omega_n, 20.0 / omega_n,
                                  [](double) { return 1e-4; }, 1e-4);
  for (const auto& s : samples) {
    const double e = (e0 + (e0_dot + omega_n * e0) * s.t) * std::exp(-omega_n * s.t);
    CHECK(std::abs(s.y[0] - target - e) <= 1e-9 * target);
  }
  // Below 1e-6 of the initial error once (1 + x) exp(-x) < 1e-6, i.e. x > 16.7.
  for (const auto& s : samples) {
    if (omega_n * s.t >= 17.0) CHECK(std::abs(s.y[0] - target) < 1e-6 * target);
  }
}

TEST_CASE("filter rate tracks a ramp input") {
  const double omega_n = 2.0 * std::numbers::pi * 50.0;
  const auto samples =
      run_filter({0.0, 0.0}, 1.0, omega_n, 10.0 / omega_n, [](double t) { return 3e-5 * t; });
  CHECK(samples.back().y[1] == doctest::Approx(3e-5).epsilon(0.02));
}

namespace {

// Largest |v_f_dot - d/dt sin(W t)| after the transient, for a filter at omega_n.
double sinusoid_rate_error(double omega_n, double big_omega) {
  static double s_omega = 0.0;
  s_omega = big_omega;
  const double period = 2.0 * std::numbers::pi / big_omega;
  const auto samples = run_filter({0.0, 0.0}, 1.0, omega_n, 30.0 / omega_n + 2.0 * period,
                                  [](double t) { return std::sin(s_omega * t); },
                                  period / 400.0);
  double worst = 0.0;
  for (const auto& s : samples) {
    if (s.t < 30.0 / omega_n) continue;
    worst = std::max(worst, std::abs(s.y[1] - big_omega * std::cos(big_omega * s.t)));
  }
  return worst;
}

}  // namespace

TEST_CASE("filter rate tracks a slow sinusoid") {
  const double omega_n = 2.0 * std::numbers::pi * 100.0;
  const double slow = omega_n / 200.0;
  CHECK(sinusoid_rate_error(omega_n, slow) <= 0.02 * slow);

  // At W = w_n / 20 the error matches the closed-form frequency response
  // |1 - H(jW)| with H = w^2 / (w^2 - W^2 + 2j zeta w W).
  const double fast = omega_n / 20.0;
  const std::complex<double> h =
      omega_n * omega_n /
      std::complex<double>(omega_n * omega_n - fast * fast, 2.0 * omega_n * fast);
  CHECK(sinusoid_rate_error(omega_n, fast) == doctest::Approx(fast * std::abs(1.0 - h)).epsilon(0.01));
}

TEST_CASE("relative contact speed") {
  const VelocityField rest{};
  const VelocityField sliding{Vec3::Zero(), Vec3(-1, 0, 0), Vec3::Zero()};
  CHECK(relative_contact_speed(rest, sliding, Vec3::Zero(), Vec3(-1, 0, 0)) == doctest::Approx(1.0));
  CHECK(relative_contact_speed(sliding, sliding, Vec3(0.3, 0.1, 0), Vec3(0, 1, 0)) == 0.0);
  const VelocityField spinning{Vec3::Zero(), Vec3::Zero(), Vec3(0, 0, 1)};
  CHECK(spinning.at(Vec3(0, 1, 0)).isApprox(Vec3(-1, 0, 0)));
  CHECK(relative_contact_speed(spinning, rest, Vec3(0, 1, 0), Vec3(1, 0, 0)) == doctest::Approx(1.0));
}

TEST_CASE("transient gain peak with the baseline grasp parameters") {
  const ContactParams p = baseline_params();
  const ContactEpisode e = episode_at(0.5, 0.1);
  const TransientGain g = transient_gain_terms(0.0, e, p, 0.2, 0.2);
  CHECK(g.i_v == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(g.d_v == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(g.t_peak == doctest::Approx(0.52).epsilon(1e-14));

  const TransientGain peak = transient_gain_terms(g.t_peak, e, p, 0.2, 0.2);
  const double expected = 10.0 / (std::sqrt(std::numbers::pi) * 0.02);
  CHECK(std::abs(peak.delta_i - expected) <= 1e-12 * expected);
  CHECK(expected == doctest::Approx(282.0948).epsilon(1e-6));
  CHECK(transient_gain(g.t_peak, e, p, 0.2, 0.2) == doctest::Approx(expected + 1.0).epsilon(1e-14));
}

TEST_CASE("transient gain tail and floor") {
  const ContactParams p = baseline_params();
  const ContactEpisode e = episode_at(0.0, 0.1);
  const TransientGain g = transient_gain_terms(0.0, e, p, 0.2, 0.2);
  const double peak = g.i_v / (std::sqrt(std::numbers::pi) * g.d_v);
  for (double t : {g.t_peak + 6.0 * g.d_v, g.t_peak + 10.0 * g.d_v}) {
    const TransientGain tail = transient_gain_terms(t, e, p, 0.2, 0.2);
    CHECK(tail.delta_i < 1e-15 * peak);
    CHECK(tail.delta_eff == doctest::Approx(1.0));
  }
  const ContactEpisode resting = episode_at(0.0, 0.0);
  CHECK(transient_gain(0.0, resting, p, 0.2, 0.0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(transient_gain_terms(0.0, resting, p, 0.2, 0.0).d_v == doctest::Approx(p.d_t / kMinImpactSpeed));
}

TEST_CASE("transient gain never drops below one") {
  const ContactParams p = baseline_params();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> speed(0.0, 2.0), time(0.0, 1.0), mass(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const ContactEpisode e = episode_at(0.1, speed(rng));
    CHECK(transient_gain(0.1 + time(rng), e, p, mass(rng), mass(rng)) >= 1.0);
  }
}

TEST_CASE("reaction wrench") {
  ContactParams p = baseline_params();
  p.g1 = 1e8;
  const auto o = overlap_with(1e-6, Vec3(0.5, 0, 0), Vec3(-1, 0, 0));
  const Wrench w = reaction_wrench(o, {1e-6, 0.0}, 1.0, p, Vec3::Zero());
  CHECK(w.force.isApprox(Vec3(-100, 0, 0), 1e-14));
  CHECK(w.torque.norm() == 0.0);

  const auto lever = overlap_with(1e-6, Vec3(0, 0.1, 0), Vec3(-1, 0, 0));
  const Wrench t = reaction_wrench(lever, {1e-6, 0.0}, 1.0, p, Vec3::Zero());
  CHECK(t.torque.isApprox(Vec3(0, 0, 10), 1e-14));

  const Wrench none = reaction_wrench(overlap_with(0.0, Vec3::Zero(), Vec3::UnitZ()), {}, 1.0, p,
                                      Vec3::Zero());
  CHECK(none.force.norm() == 0.0);
  CHECK(none.torque.norm() == 0.0);
}

TEST_CASE("reaction force is along s_n and never pulls") {
  const ContactParams p = baseline_params();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> vol(0.0, 1e-6), rate(-1e-3, 1e-3), gain(1.0, 50.0);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 s_n = Vec3(n(rng), n(rng), n(rng)).normalized();
    const auto o = overlap_with(vol(rng), Vec3(n(rng), n(rng), n(rng)), s_n);
    const Wrench w = reaction_wrench(o, {o.v, rate(rng)}, gain(rng), p, Vec3::Zero());
    CHECK(w.force.dot(s_n) >= 0.0);
    CHECK((w.force - w.force.dot(s_n) * s_n).norm() <= 1e-12 * (1.0 + w.force.norm()));
  }
  CHECK(reaction_magnitude(1e-7, -1.0, 1.0, p) == 0.0);
}

TEST_CASE("damping term dissipates during steady filtering") {
  // Body B slides along x against A; the volume rate comes from the overlap
  // geometry and the damping part of the reaction is isolated by v = 0.
  const ContactParams p = baseline_params();
  const mesh::ConvexShape cube(mesh::make_cuboid(Vec3::Constant(0.05)));
  const double dt = 1e-6;
  for (double u : {-0.5, -0.01, 0.01, 0.5}) {
    for (double x : {0.049, 0.045, 0.03}) {
      const auto now = mesh::characterize_overlap(cube, Pose::identity(), cube,
                                                  Pose::translation(Vec3(x, 0.001, 0)));
      const auto later = mesh::characterize_overlap(cube, Pose::identity(), cube,
                                                    Pose::translation(Vec3(x + u * dt, 0.001, 0)));
      REQUIRE(now);
      REQUIRE(later);
      const double v_dot = (later->v - now->v) / dt;
      mesh::OverlapResult damping_only = *now;
      damping_only.v = 0.0;
      const Wrench w = reaction_wrench(damping_only, {0.0, v_dot}, 1.0, p, Vec3::Zero());
      const Vec3 v_a_rel_b = -u * Vec3::UnitX();
      CHECK(w.force.dot(v_a_rel_b) <= 0.0);
    }
  }
}

TEST_CASE("friction force") {
  const FrictionParams f{0.2, 0.2, 1.0};
  CHECK(friction_force(Vec3(0, 0, 1), Vec3::Zero(), f).norm() == 0.0);
  const Vec3 ff = friction_force(Vec3(0, 0, 1), Vec3(1, 0, 0), f);
  CHECK(ff.x() == doctest::Approx(-(0.2 * std::tanh(1.0) + 0.2)).epsilon(1e-14));
  CHECK(ff.x() == doctest::Approx(-0.352319).epsilon(1e-6));
  CHECK(ff.y() == 0.0);
  CHECK(ff.z() == 0.0);

  const FrictionParams steep{0.2, 0.0, 1e6};
  CHECK(std::abs(friction_force(Vec3(0, 0, 1), Vec3(0.01, 0, 0), steep).norm() - 0.2) < 1e-9);
}

TEST_CASE("friction opposes sliding and grows with speed and load") {
  const FrictionParams f{0.2, 0.2, 1.0};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
    double last = 0.0;
    for (double speed : {1e-6, 1e-3, 0.1, 1.0, 10.0}) {
      const Vec3 ff = friction_force(Vec3(0, 0, 2.0), speed * dir, f);
      CHECK(ff.normalized().dot(dir) == doctest::Approx(-1.0).epsilon(1e-12));
      CHECK(ff.norm() >= last);
      last = ff.norm();
    }
    last = 0.0;
    for (double load : {0.0, 0.5, 1.0, 5.0}) {
      const double m = friction_force(Vec3(load, 0, 0), 0.3 * dir, f).norm();
      CHECK(m >= last);
      last = m;
    }
  }
}

TEST_CASE("episode lifecycle") {
  CHECK(update_episodes({}, {}, 0.0).empty());

  const BodyPair pair{0, 2};
  const std::vector<DetectedOverlap> first{{pair, 2e-7, 0.05}};
  const EpisodeTable opened = update_episodes({}, first, 0.3);
  REQUIRE(opened.size() == 1);
  const ContactEpisode& e = opened.at(pair);
  CHECK(e.t_c == 0.3);
  CHECK(e.dv_c0 == 0.05);
  CHECK(e.filter.v_f == 2e-7);
  CHECK(e.filter.v_f_dot == 0.0);

  EpisodeTable evolved = opened;
  evolved.at(pair).filter = {3e-7, 1e-5};
  const EpisodeTable kept = update_episodes(evolved, std::vector<DetectedOverlap>{{pair, 4e-7, 9.0}}, 0.4);
  CHECK(kept.at(pair).t_c == 0.3);
  CHECK(kept.at(pair).dv_c0 == 0.05);
  CHECK(kept.at(pair).filter.v_f_dot == 1e-5);

  const EpisodeTable separated = update_episodes(kept, {}, 0.5);
  CHECK(separated.empty());
  const EpisodeTable again = update_episodes(separated, std::vector<DetectedOverlap>{{pair, 1e-8, -0.2}}, 0.7);
  CHECK(again.at(pair).t_c == 0.7);
  CHECK(again.at(pair).dv_c0 == kMinImpactSpeed);
}

TEST_CASE("body pairs are ordered") {
  CHECK(BodyPair::ordered(3, 1) == BodyPair{1, 3});
  CHECK(BodyPair::ordered(1, 3) == BodyPair{1, 3});
  CHECK(BodyPair{0, 5} < BodyPair{1, 2});
}

}
