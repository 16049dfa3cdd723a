#include "wheelpred/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wheelpred/error.hpp"
#include "wheelpred/rng.hpp"

namespace wheelpred {

namespace {

constexpr double kNoiseClip = 6.0;

// Decorrelates the noise stream from the excitation stream of the same seed.
std::uint64_t noise_seed(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double clipped_normal(Rng& rng) { return std::clamp(rng.normal(), -kNoiseClip, kNoiseClip); }

}  // namespace

TerrainProfile TerrainProfile::tile() {
  return {"tile", 1.0, 1.2, 0.5, 0.35, 0.01, 0.02};
}

TerrainProfile TerrainProfile::carpet() {
  return {"carpet", 0.85, 1.0, 0.8, 0.55, 0.02, 0.04};
}

void TerrainProfile::validate(double dt) const {
  if (!(gain_v >= 0.0) || !(gain_w >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "terrain gains must be >= 0");
  }
  if (!(tau_v >= dt) || !(tau_w >= dt)) {
    throw Error(ErrorCode::InvalidArgument, "terrain time constants must be >= dt");
  }
  if (!(noise_v >= 0.0) || !(noise_w >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "terrain noise must be >= 0");
  }
}

void ExcitationSpec::validate() const {
  if (!(min_segment_s > 0.0) || !(max_segment_s >= min_segment_s)) {
    throw Error(ErrorCode::InvalidArgument, "excitation segment range is empty");
  }
  if (!(min_magnitude >= 0.0) || !(max_magnitude >= min_magnitude) || max_magnitude > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "excitation magnitude range must lie in [0, 1]");
  }
  if (!(ramp_fraction >= 0.0 && ramp_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "ramp fraction must lie in [0, 1]");
  }
  if (!(ramp_s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ramp length must be >= 0");
}

bool is_known_profile(const std::string& name) {
  return name == "tile" || name == "carpet" || name == "hybrid";
}

SimConfig SimConfig::for_profile(const std::string& profile, double minutes,
                                 std::uint64_t seed) {
  SimConfig config;
  config.minutes = minutes;
  config.seed = seed;
  config.label = profile;
  if (profile == "tile") {
    config.schedule = {{60.0, TerrainProfile::tile()}};
  } else if (profile == "carpet") {
    config.schedule = {{60.0, TerrainProfile::carpet()}};
  } else if (profile == "hybrid") {
    config.schedule = {{60.0, TerrainProfile::tile()}, {60.0, TerrainProfile::carpet()}};
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown profile '" + profile + "'");
  }
  return config;
}

void SimConfig::validate() const {
  if (!(minutes > 0.0)) throw Error(ErrorCode::InvalidArgument, "minutes must be > 0");
  if (schedule.empty()) throw Error(ErrorCode::InvalidArgument, "empty terrain schedule");
  for (const TerrainSpan& span : schedule) {
    if (!(span.seconds > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "terrain span must last > 0 s");
    }
    span.profile.validate();
  }
  excitation.validate();
}

std::pair<double, double> step_dynamics(double v, double w, double ux, double uy,
                                        const TerrainProfile& terrain, double dt) {
  return {v + dt * (terrain.gain_v * uy - v) / terrain.tau_v,
          w + dt * (terrain.gain_w * ux - w) / terrain.tau_w};
}

std::vector<Command> generate_excitation(const ExcitationSpec& spec, double minutes,
                                         std::uint64_t seed) {
  spec.validate();
  const std::size_t total = samples_for_minutes(minutes);
  std::vector<Command> commands;
  commands.reserve(total);
  Rng rng(seed);

  Command previous{0.0, 0.0};
  while (commands.size() < total) {
    const double seconds = rng.uniform(spec.min_segment_s, spec.max_segment_s);
    const auto plateau = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                      std::llround(seconds / kSampleDt)));
    const double magnitude = rng.uniform(spec.min_magnitude, spec.max_magnitude);
    const double angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const Command target{magnitude * std::sin(angle), magnitude * std::cos(angle)};
    const bool ramp = rng.uniform() < spec.ramp_fraction;

    std::size_t ramp_len = 0;
    if (ramp) {
      ramp_len = std::min(plateau, static_cast<std::size_t>(std::llround(spec.ramp_s / kSampleDt)));
    }
    for (std::size_t j = 0; j < plateau && commands.size() < total; ++j) {
      if (j < ramp_len) {
        const double a = static_cast<double>(j + 1) / static_cast<double>(ramp_len);
        commands.push_back({previous.ux + a * (target.ux - previous.ux),
                            previous.uy + a * (target.uy - previous.uy)});
      } else {
        commands.push_back(target);
      }
    }
    previous = target;
  }
  return commands;
}

std::string simulation_comment(const SimConfig& config) {
  return " seed=" + std::to_string(config.seed) + " profile=" + config.label +
         " rng=" + Rng::kAlgorithm;
}

DriveLog simulate(const SimConfig& config) {
  config.validate();
  const std::vector<Command> commands =
      generate_excitation(config.excitation, config.minutes, config.seed);

  std::vector<std::size_t> span_samples;
  for (const TerrainSpan& span : config.schedule) {
    span_samples.push_back(
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(span.seconds / kSampleDt))));
  }

  DriveLog log;
  log.dt = kSampleDt;
  log.label = config.label;
  log.samples.reserve(commands.size());

  Rng noise(noise_seed(config.seed));
  double v = 0.0;
  double w = 0.0;
  std::size_t span = 0;
  std::size_t in_span = 0;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (in_span == span_samples[span]) {
      span = (span + 1) % config.schedule.size();
      in_span = 0;
    }
    const TerrainProfile& terrain = config.schedule[span].profile;
    const Command& u = commands[i];
    std::tie(v, w) = step_dynamics(v, w, u.ux, u.uy, terrain, kSampleDt);
    const double nv = terrain.noise_v * clipped_normal(noise);
    const double nw = terrain.noise_w * clipped_normal(noise);
    log.samples.push_back({static_cast<double>(i) * kSampleDt, u.ux, u.uy, v + nv, w + nw});
    ++in_span;
  }
  return log;
}

}  // namespace wheelpred
