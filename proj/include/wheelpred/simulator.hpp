#ifndef WHEELPRED_SIMULATOR_HPP
#define WHEELPRED_SIMULATOR_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wheelpred/trajectory_data.hpp"

namespace wheelpred {

/// First-order lag response of the chair on one floor type, plus the noise of
/// the odometry that records it.
struct TerrainProfile {
  std::string name;
  double gain_v = 1.0;   // m/s per unit forward deflection
  double gain_w = 1.0;   // rad/s per unit lateral deflection
  double tau_v = 0.5;    // s
  double tau_w = 0.5;    // s
  double noise_v = 0.0;  // m/s, std dev of recorded linear velocity noise
  double noise_w = 0.0;  // rad/s

  static TerrainProfile tile();
  static TerrainProfile carpet();

  /// Throws InvalidArgument unless gains >= 0, noise >= 0 and both time
  /// constants are at least `dt`.
  void validate(double dt = kSampleDt) const;
};

/// Piece of a cyclic terrain schedule.
struct TerrainSpan {
  double seconds = 60.0;
  TerrainProfile profile;
};

struct ExcitationSpec {
  double min_segment_s = 1.0;
  double max_segment_s = 5.0;
  double min_magnitude = 0.0;
  double max_magnitude = 1.0;
  double ramp_fraction = 0.5;  // share of transitions that ramp instead of jump
  double ramp_s = 1.0;         // ramp length, cut short by the plateau length

  void validate() const;
};

struct SimConfig {
  double minutes = 1.0;
  std::string label;
  /// Cycled in order; a single span means one terrain throughout.
  std::vector<TerrainSpan> schedule;
  ExcitationSpec excitation;
  std::uint64_t seed = 0;

  static SimConfig for_profile(const std::string& profile, double minutes,
                               std::uint64_t seed);
  void validate() const;
};

/// Names accepted by SimConfig::for_profile.
bool is_known_profile(const std::string& name);

std::pair<double, double> step_dynamics(double v, double w, double ux, double uy,
                                        const TerrainProfile& terrain, double dt);

/// Joystick stream at 5 Hz: plateaus of random direction and magnitude for
/// random durations, joined by jumps or linear ramps.
std::vector<Command> generate_excitation(const ExcitationSpec& spec, double minutes,
                                         std::uint64_t seed);

/// Drives the lag dynamics with the excitation from rest. The command at
/// sample i acts over the interval ending at sample i. Recorded velocities
/// carry Gaussian noise clipped at 6 sigma.
DriveLog simulate(const SimConfig& config);

/// Comment line written above the CSV header for a simulated log.
std::string simulation_comment(const SimConfig& config);

}  // namespace wheelpred

#endif  // WHEELPRED_SIMULATOR_HPP
