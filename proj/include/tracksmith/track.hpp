#pragma once

#include <optional>

#include "tracksmith/segments.hpp"

namespace tracksmith {

// --- Platform geometry ---

// Place the next block: distance along (bearing + angle) from the previous
// block's center, raised by height_delta. +angle turns counterclockwise
// (right-hand rule, z-up). The spec must already be clamped.
PlatformBlock place_platform_segment(const PlatformBlock& prev, double prev_bearing_deg,
                                     const PlatformSegmentSpec& spec);

// Fresh platform track: a start block at the origin.
TrackState make_platform_track(const TrackConfig& cfg);

// Clamp the spec, place the block and append it (with its spec) to the track.
// Returns the bearing the block was placed with, for observation building.
void append_platform_segment(TrackState& track, const PlatformSegmentSpec& raw_spec,
                             double current_bearing_deg);

// Bearing defined by the last two blocks, or fallback for a lone start block.
double platform_bearing(const TrackState& track, double fallback_deg);

// Highest walkable top surface at (x, y) among blocks whose top is at or
// below z_max; nullopt when the point is over no block.
std::optional<double> ground_height_at(const TrackState& track, double x, double y,
                                       double z_max, double inflate,
                                       const TrackConfig& cfg);

double lowest_block_top(const TrackState& track);

// --- Racing geometry ---

RoadArc make_road_arc(const Pose& start, const RaceSegmentSpec& spec, const TrackConfig& cfg,
                      double s_begin);

// Fresh racing track: one straight spawn segment from the origin, heading +x.
TrackState make_race_track(const TrackConfig& cfg);

// Clamp the spec and append the next arc, then run the self-collision check
// against non-adjacent geometry and fixed obstacles; sets
// terminated_by_collision on a hit. Collision is a terminal outcome, not an
// error. No-op if the track is already terminated.
void extend_race_track(TrackState& track, const RaceSegmentSpec& raw_spec,
                       const TrackConfig& cfg);

// Projection of a point onto the road.
struct RoadSample {
    int segment = -1;
    double s_local = 0.0;     // arclength within the segment
    double s_total = 0.0;     // cumulative arclength along the track
    double lateral = 0.0;     // signed offset, +left of travel direction
    double road_z = 0.0;
    double road_heading_deg = 0.0;
    double banking_deg = 0.0;
    bool on_road = false;     // |lateral| <= half_width and point near road z
};

// Nearest road point to p. `hint_segment` narrows the search to neighbouring
// segments when >= 0 (falls back to a full scan when nothing matches).
RoadSample project_to_road(const TrackState& track, const Vec3& p, int hint_segment = -1);

// Distance from the vehicle position along direction `heading_deg` until the
// swept point leaves the road surface; capped at max_dist.
double road_edge_probe(const TrackState& track, const Vec3& origin, double heading_deg,
                       double max_dist, int hint_segment = -1);

// --- Raycasts ---

// Distance to the nearest geometry (blocks, road ribbon, obstacles) along a
// normalized direction; max_dist when nothing is hit, 0 when the origin is
// inside geometry.
double raycast(const TrackState& track, const Vec3& origin, const Vec3& dir, double max_dist);

// Same, ignoring segments with index >= skip_from_segment (used by the
// self-collision check so a new arc does not collide with its own tail or
// its immediate predecessor).
double raycast_excluding(const TrackState& track, const Vec3& origin, const Vec3& dir,
                         double max_dist, int skip_from_segment);

}  // namespace tracksmith
