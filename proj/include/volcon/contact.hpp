#pragma once

#include <compare>
#include <map>
#include <numbers>
#include <span>

#include "volcon/math.hpp"
#include "volcon/mesh.hpp"

namespace volcon::contact {

//! Floor applied to the frozen impact speed [m/s].
inline constexpr double kMinImpactSpeed = 1e-4;
//! Relative sliding speeds below this produce no friction [m/s].
inline constexpr double kMinSlidingSpeed = 1e-9;

/// Gains of the volumetric Kelvin-Voigt contact law and of its derivative filter.
struct ContactParams {
  double g1 = 0.0;       //!< stiffness gain [N/m^3]
  double g2 = 0.0;       //!< damping gain [N s/m^3]
  double g_i = 0.0;      //!< impulse magnitude parameter
  double g_t = 1.0;      //!< impulse timing parameter
  double d_t = 0.0;      //!< target depth [m]
  double zeta = 1.0;     //!< filter damping ratio
  double omega_n = 2.0 * std::numbers::pi * 500.0;  //!< filter natural frequency [rad/s]

  //! Throws ParameterError naming the first non-positive field.
  void validate() const;
};

struct FrictionParams {
  double mu = 0.0;     //!< Coulomb coefficient
  double beta = 0.0;   //!< viscous coefficient [N s/m]
  double gamma = 1.0;  //!< tanh slope [s/m]

  void validate() const;
};

//! Second-order low-pass state whose rate estimates dv/dt.
struct FilterState {
  double v_f = 0.0;      //!< filtered volume [m^3]
  double v_f_dot = 0.0;  //!< filtered volume rate [m^3/s]
};

struct FilterDerivative {
  double d_v_f = 0.0;
  double d_v_f_dot = 0.0;
};

FilterDerivative filter_rhs(const FilterState& state, double v, double zeta, double omega_n);

//! Filter at rest on the initial volume. Throws ParameterError for v0 < 0.
FilterState init_filter(double v0);

//! Rigid velocity field v(x) = lin_vel + ang_vel x (x - com), world frame.
struct VelocityField {
  Vec3 com = Vec3::Zero();
  Vec3 lin_vel = Vec3::Zero();
  Vec3 ang_vel = Vec3::Zero();

  Vec3 at(const Vec3& x) const { return lin_vel + ang_vel.cross(x - com); }
};

//! Approach speed of B toward A at c along s_n; positive when closing.
double relative_contact_speed(const VelocityField& a, const VelocityField& b, const Vec3& c,
                              const Vec3& s_n);

using BodyId = int;

//! Unordered body pair stored with a < b.
struct BodyPair {
  BodyId a = 0;
  BodyId b = 0;

  static BodyPair ordered(BodyId x, BodyId y) { return x < y ? BodyPair{x, y} : BodyPair{y, x}; }
  auto operator<=>(const BodyPair&) const = default;
};

//! Bookkeeping for one contact between a pair, from first overlap to separation.
struct ContactEpisode {
  BodyPair pair;
  double t_c = 0.0;    //!< first-contact time [s]
  double dv_c0 = kMinImpactSpeed;  //!< impact speed frozen at t_c [m/s]
  FilterState filter;
  bool active = true;
};

using EpisodeTable = std::map<BodyPair, ContactEpisode>;

struct TransientGain {
  double i_v = 0.0;
  double d_v = 0.0;
  double t_peak = 0.0;
  double delta_i = 0.0;
  double delta_eff = 1.0;
};

//! Gaussian impulse gain after first contact. `m_a`/`m_b` are the masses that
//! take part in the impact (zero for immovable bodies).
TransientGain transient_gain_terms(double t, const ContactEpisode& episode,
                                   const ContactParams& params, double m_a, double m_b);

//! 1 + delta_i, the multiplier applied to the impedance force.
double transient_gain(double t, const ContactEpisode& episode, const ContactParams& params,
                      double m_a, double m_b);

struct Wrench {
  Vec3 force = Vec3::Zero();   //!< [N]
  Vec3 torque = Vec3::Zero();  //!< about the center of mass [N m]

  Wrench& operator+=(const Wrench& o) {
    force += o.force;
    torque += o.torque;
    return *this;
  }
};

//! Non-negative impedance magnitude delta_eff * (g1 v + g2 v_f_dot).
double reaction_magnitude(double v, double v_f_dot, double delta_eff, const ContactParams& params);

//! Wrench on body A (center of mass p_o). Body B receives -force with its own lever arm.
Wrench reaction_wrench(const mesh::OverlapResult& overlap, const FilterState& filter,
                       double delta_eff, const ContactParams& params, const Vec3& p_o);

//! Regularized Coulomb plus viscous friction opposing v_r.
Vec3 friction_force(const Vec3& f_n, const Vec3& v_r, const FrictionParams& params);

//! Overlap found at a step boundary, with the approach speed at that instant.
struct DetectedOverlap {
  BodyPair pair;
  double v = 0.0;
  double approach_speed = 0.0;
};

//! Opens episodes for new overlaps, drops separated pairs, keeps the rest untouched.
EpisodeTable update_episodes(const EpisodeTable& episodes,
                             std::span<const DetectedOverlap> overlaps, double t);

}  // namespace volcon::contact
