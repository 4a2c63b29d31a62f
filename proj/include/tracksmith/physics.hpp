#pragma once

#include <utility>

#include "tracksmith/track.hpp"

namespace tracksmith {

// Fixed-timestep kinematic model. The constants are configuration with these
// defaults; everything downstream (rewards, training, replay verification)
// assumes the stepping functions are pure and bit-deterministic.
struct PhysicsConfig {
    double dt = 0.05;

    // platform character
    double walk_speed = 4.0;       // m/s
    double turn_rate_deg = 180.0;  // deg/s
    double jump_speed = 7.0;       // m/s, see ballistics tests for the bound
    double gravity = 9.81;
    double step_height = 0.3;      // walkable ledge without jumping
    double landing_tolerance = 0.1;
    double fall_margin = 5.0;      // below lowest block top
    int max_steps_platform = 2000;
    double goal_radius = 3.0;      // horizontal
    double goal_z_tolerance = 3.0;

    // racing vehicle
    double accel_max = 5.0;             // m/s^2
    double speed_max = 25.0;            // m/s
    double steer_curvature_max = 0.04;  // rad/m at full lock
    double grip_base = 12.0;            // m/s^2 lateral before sliding
    double grip_bank_per_deg = 0.4;     // extra grip per degree of favorable banking
    double air_threshold = 0.5;         // height above road counting as airtime
    int max_steps_racing = 3000;
    double waypoint_radius = 10.0;
    double frontier_margin = 15.0;      // road remaining that triggers a new segment
};

struct AgentState {
    Vec3 position;
    double heading_deg = 0.0;
    double speed = 0.0;             // signed for the character, [0, v_max] for the vehicle
    double vertical_velocity = 0.0;
    bool airborne = false;
    int elapsed_steps = 0;
    double yaw_rate_deg = 0.0;      // last step's heading rate (vehicle observation)
    int road_hint = 0;              // projection warm start
};

struct StepEvents {
    double progress_delta = 0.0;  // meters toward the goal, signed
    bool fell = false;
    bool off_track = false;
    bool reached_goal = false;
    bool reached_segment_frontier = false;
    bool airtime_step = false;
    bool timed_out = false;

    bool terminal() const { return fell || off_track || reached_goal || timed_out; }
    bool failure() const { return fell || off_track || timed_out; }
};

struct PlatformAction {
    double move = 0.0;  // [-1, 1] forward/backward
    double turn = 0.0;  // [-1, 1]
    bool jump = false;
};

struct VehicleAction {
    double throttle = 0.0;  // [-1, 1]
    double turn = 0.0;      // [-1, 1]
};

std::pair<AgentState, StepEvents> step_platform(const AgentState& state, const PlatformAction& action,
                                                const TrackState& track, const Vec3& goal,
                                                const PhysicsConfig& phys, const TrackConfig& cfg);

std::pair<AgentState, StepEvents> step_vehicle(const AgentState& state, const VehicleAction& action,
                                               const TrackState& track, const Vec3& goal,
                                               const PhysicsConfig& phys, const TrackConfig& cfg);

double detect_progress(const Vec3& before, const Vec3& after, const Vec3& goal);

// Initial agent placement for an episode.
AgentState spawn_platform_agent(const TrackState& track, double initial_bearing_deg);
AgentState spawn_race_agent(const TrackState& track);

}  // namespace tracksmith
