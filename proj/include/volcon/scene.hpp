#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "volcon/contact.hpp"
#include "volcon/dynamics.hpp"
#include "volcon/math.hpp"
#include "volcon/mesh.hpp"

namespace volcon::scene {

struct StepOptions {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double h_max = 1e-3;        //!< also the spacing of contact event detection [s]
  double output_step = 1e-3;  //!< metrics cadence [s]
  //! Reuse the boundary overlap for every stage of an interval instead of
  //! recomputing it from the stage poses.
  bool frozen_geometry = false;
  mesh::DirectionMode direction_mode = mesh::DirectionMode::CentroidToContact;
};

//! Reference for the kinetic-energy ratio: the energy `object` would have if it
//! moved rigidly with body `reference` (which must be Kinematic).
struct EnergyReference {
  int object = -1;
  int reference = -1;
};

struct World {
  std::vector<dynamics::RigidBody> bodies;
  contact::ContactParams contact_params;
  contact::FrictionParams friction_params;
  Vec3 gravity{0.0, 0.0, -9.81};
  contact::EpisodeTable episodes;
  std::vector<Vec3> applied_forces;  //!< per body, world frame [N]; empty means none
  double time = 0.0;
  StepOptions options;
  std::optional<EnergyReference> energy_reference;

  //! Integrator step carried across boundary intervals.
  double h_next = 0.0;
  //! Stage evaluations whose overlap direction could not be resolved.
  std::size_t indeterminate_count = 0;

  //! Validates parameters and bodies; throws ParameterError.
  void validate() const;
};

//! Pairs whose posed AABBs overlap, ascending. Pairs with no integrated body
//! (Static or Kinematic on both sides) are skipped since no force could act.
std::vector<contact::BodyPair> detect_pairs(const World& world);

//! Every pair that could ever be reported by detect_pairs, ascending. These
//! fix the per-pair column set of the metrics output.
std::vector<contact::BodyPair> candidate_pairs(const World& world);

//! Contact output of one pair at one evaluation.
struct PairContact {
  contact::BodyPair pair;
  bool touching = false;
  double force = 0.0;      //!< reaction magnitude [N]
  double volume = 0.0;     //!< overlap volume [m^3]
  double v_f_dot = 0.0;    //!< filtered volume rate [m^3/s]
  double delta_eff = 1.0;
  Vec3 point = Vec3::Zero();
  Vec3 direction = Vec3::Zero();
};

struct Efforts {
  std::vector<contact::Wrench> wrenches;  //!< per body, world frame, about the center of mass
  std::vector<contact::Wrench> contact_wrenches;  //!< contact part of `wrenches`
  std::vector<double> filter_inputs;      //!< per episode in table order: v at this stage
  std::vector<PairContact> contacts;      //!< per episode in table order
  std::size_t indeterminate = 0;          //!< overlaps skipped for lack of a direction
};

//! Number of state entries per integrated body: position, quaternion (w x y z),
//! linear velocity, body angular velocity.
inline constexpr int kBodyStateSize = 13;

//! Packs integrated bodies (ascending id) then episode filters (table order).
dynamics::State pack_state(const World& world);
//! Writes a packed state back into the bodies and episode filters.
void unpack_state(World& world, const dynamics::State& y);

//! Evaluates gravity, applied, reaction and friction efforts at state y and time t.
//! When `frozen` is given it supplies the overlap of each episode instead of the
//! stage poses.
Efforts assemble_efforts(const World& world, const dynamics::State& y, double t,
                         const std::vector<std::optional<mesh::OverlapResult>>* frozen = nullptr);

//! Time derivative of the packed state. Returns the number of overlaps skipped
//! for lack of a direction.
std::size_t state_derivative(const World& world, const dynamics::State& y, double t,
                      dynamics::State& dydt,
                      const std::vector<std::optional<mesh::OverlapResult>>* frozen = nullptr);

struct MetricsSample {
  double t = 0.0;
  std::vector<PairContact> pairs;   //!< one per candidate pair
  std::vector<double> kinetic_energy;  //!< per body [J]
  std::vector<dynamics::RigidBody> bodies;  //!< state snapshot
  double expected_energy = 0.0;
  double ke_ratio = std::numeric_limits<double>::quiet_NaN();
};

using MetricsSink = std::function<void(const MetricsSample&)>;

//! Samples the world at its current time.
MetricsSample sample_metrics(const World& world);

//! Advances the world to t_end, detecting contacts at every boundary (spaced at
//! most h_max apart) and emitting one sample per output step. The sample at the
//! starting time is emitted when `emit_initial` is set.
void step(World& world, double t_end, const MetricsSink& sink = {}, bool emit_initial = false);

//! measured / expected with the zero-energy conventions: both near zero gives 1,
//! only expected near zero gives +infinity.
double kinetic_energy_ratio(double measured, double expected);

//! Kinetic energy of a body of `mass` moving rigidly with the trajectory.
double expected_energy(const dynamics::SinusoidTrajectory& trajectory, double mass, double t);

}  // namespace volcon::scene
