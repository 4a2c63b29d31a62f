#pragma once

#include <vector>

#include "tracksmith/geom.hpp"

namespace tracksmith {

enum class GameKind { platform, racing };

// Generator action for the platform game. Ranges are closed; clamp_spec maps
// raw policy output into them.
struct PlatformSegmentSpec {
    double distance = 7.5;      // meters, [5, 10], center to center
    double angle = 0.0;         // degrees, [-180, 180], relative to current bearing
    double size = 5.0;          // meters, [4, 6], square side
    double height_delta = 0.0;  // meters, [-2, 2]
};

// Generator action for the racing game.
struct RaceSegmentSpec {
    double length = 25.0;       // meters, [20, 30]
    double curve = 0.0;         // degrees, [-30, 30], total heading change
    double height_delta = 0.0;  // meters, [-5, 5]
};

PlatformSegmentSpec clamp_spec(const PlatformSegmentSpec& raw);
RaceSegmentSpec clamp_spec(const RaceSegmentSpec& raw);

// A placed platform block. `center` is the center of the walkable top
// surface; the slab extends `thickness` meters below it.
struct PlatformBlock {
    Vec3 center;
    double size = 5.0;
    double yaw_deg = 0.0;
};

// One road segment: circular arc in plan view (straight when curve == 0) with
// linearly interpolated height. Derived fields are recomputed on load.
struct RoadArc {
    Pose start;
    double length = 25.0;
    double curve_deg = 0.0;
    double height_delta = 0.0;
    double half_width = 4.0;
    double vertical_half = 2.0;  // ribbon z extent for collision tests
    double banking_deg = 0.0;    // derived: banking_gain * curve, capped
    Pose end;                    // derived
    double s_begin = 0.0;        // derived: cumulative arclength at segment start

    // Centerline point and heading at arclength s in [0, length].
    Pose at(double s) const;
};

struct TrackConfig {
    double road_half_width = 4.0;
    double banking_gain = 0.5;        // degrees of banking per degree of curve
    double banking_cap_deg = 15.0;
    double block_thickness = 1.0;
    double road_vertical_half = 2.0;  // ribbon z extent for collision/raycast
    double strip_length = 1.0;        // arc tessellation step for raycasts
    double start_block_size = 6.0;
    double start_road_length = 20.0;
    int ray_count = 16;               // generator/solver fan size
    double ray_fan_deg = 180.0;
    double ray_max_dist = 100.0;
    double obs_distance_scale = 100.0;
    double collision_sample_step = 2.0;
};

struct TrackState {
    GameKind game = GameKind::platform;
    std::vector<PlatformSegmentSpec> platform_specs;  // specs[i] produced blocks[i+1]
    std::vector<PlatformBlock> blocks;
    std::vector<RaceSegmentSpec> race_specs;
    std::vector<RoadArc> arcs;
    std::vector<Obb> obstacles;
    Vec3 goal;
    bool terminated_by_collision = false;

    double total_road_length() const {
        return arcs.empty() ? 0.0 : arcs.back().s_begin + arcs.back().length;
    }
};

}  // namespace tracksmith
