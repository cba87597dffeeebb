#pragma once

// Scenario configuration (JSON) and reference trajectories.

#include <numbers>
#include <string>

#include "maats/allocator.hpp"
#include "maats/control.hpp"
#include "maats/dynamics.hpp"

namespace maats {

enum class AllocatorKind { Sqp, Baseline };
enum class TrajectoryKind { Hover, Spiral };

const char* to_string(AllocatorKind k);
const char* to_string(TrajectoryKind k);

struct TrajectoryParams {
  TrajectoryKind kind = TrajectoryKind::Spiral;
  double radius = 1.0;                   // m
  double angular_rate = std::numbers::pi / 5.0;  // rad/s, one revolution per 10 s
  double climb_rate = 0.05;              // m/s
  Vec3 center = Vec3(0.0, 0.0, 1.0);
  double phase = 0.0;                    // rad

  bool operator==(const TrajectoryParams&) const = default;
};

struct AllocatorConfig {
  AllocatorKind kind = AllocatorKind::Sqp;
  double mu = 0.15;
  SqpSettings sqp;
  double baseline_cone_deg = 20.0;
};

struct OutputPaths {
  std::string dir = "out";
  std::string timeseries = "timeseries.csv";
  std::string metrics = "metrics.json";
  std::string sweep = "sweep.json";

  bool operator==(const OutputPaths&) const = default;
};

struct ScenarioConfig {
  PlantParams plant = PlantParams::defaults();
  LoadGains load_gains;
  UavGains uav_gains;
  AllocatorConfig alloc;
  TrajectoryParams trajectory;
  double duration = 20.0;  // s
  double dt = 1e-3;        // s
  OutputPaths output;

  /// Throws Error{InvalidConfig} naming the offending key.
  void validate() const;
};

bool operator==(const LoadGains& a, const LoadGains& b);
bool operator==(const UavGains& a, const UavGains& b);
bool operator==(const SqpSettings& a, const SqpSettings& b);
bool operator==(const AllocatorConfig& a, const AllocatorConfig& b);
bool operator==(const PlantParams& a, const PlantParams& b);
bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

/// Parses a JSON document; missing keys take the defaults above, an empty
/// document yields the full default scenario. Throws Error{InvalidConfig}.
ScenarioConfig load_config(const std::string& text);
ScenarioConfig load_config_file(const std::string& path);
std::string serialize_config(const ScenarioConfig& cfg);

/// Closed-form reference with exact first and second derivatives.
ReferencePoint spiral_reference(const TrajectoryParams& params, double t);
ReferencePoint reference_at(const TrajectoryParams& params, double t);

/// Load at the reference start point (moving with the reference velocity),
/// cables on the cold-start cone, UAVs level and at rest relative to the load.
PlantState initial_state(const ScenarioConfig& cfg);

}  // namespace maats
