#include "tracksmith/physics.hpp"

#include <algorithm>
#include <cmath>

namespace tracksmith {

double detect_progress(const Vec3& before, const Vec3& after, const Vec3& goal) {
    return distance(before, goal) - distance(after, goal);
}

AgentState spawn_platform_agent(const TrackState& track, double initial_bearing_deg) {
    AgentState a;
    const PlatformBlock& start = track.blocks.front();
    a.position = start.center;
    a.heading_deg = wrap_degrees(initial_bearing_deg);
    return a;
}

AgentState spawn_race_agent(const TrackState& track) {
    AgentState a;
    const RoadArc& first = track.arcs.front();
    a.position = first.start.position;
    a.heading_deg = first.start.heading_deg;
    a.road_hint = 0;
    return a;
}

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

std::pair<AgentState, StepEvents> step_platform(const AgentState& state, const PlatformAction& action,
                                                const TrackState& track, const Vec3& goal,
                                                const PhysicsConfig& phys, const TrackConfig& cfg) {
    AgentState next = state;
    StepEvents ev;
    next.elapsed_steps = state.elapsed_steps + 1;

    const double dt = phys.dt;
    const double turn = clamp_unit(action.turn);
    const double move = clamp_unit(action.move);

    double prev_heading = next.heading_deg;
    next.heading_deg = wrap_degrees(state.heading_deg + turn * phys.turn_rate_deg * dt);
    next.yaw_rate_deg = wrap_degrees(next.heading_deg - prev_heading) / dt;
    next.speed = move * phys.walk_speed;

    Vec3 fwd = heading_unit(next.heading_deg);
    Vec3 target = state.position + fwd * (next.speed * dt);
    target.z = state.position.z;

    if (!state.airborne && action.jump) {
        next.airborne = true;
        next.vertical_velocity = phys.jump_speed;
    }

    if (!state.airborne && !next.airborne) {
        // Grounded locomotion. Small ledges within step_height are walkable in
        // both directions; taller rises block the move, taller drops start a fall.
        auto ground = ground_height_at(track, target.x, target.y,
                                       state.position.z + phys.step_height, 0.0, cfg);
        auto wall = ground_height_at(track, target.x, target.y, state.position.z + 3.0, 0.0, cfg);
        if (wall && *wall > state.position.z + phys.step_height) {
            // Blocked by a face taller than a step. Stay put, keep heading.
            next.position = state.position;
        } else if (ground && *ground >= state.position.z - phys.step_height) {
            next.position = target;
            next.position.z = *ground;
        } else {
            // Walked off an edge.
            next.position = target;
            next.airborne = true;
            next.vertical_velocity = 0.0;
        }
    } else {
        // Airborne: full horizontal control, ballistic vertical.
        double w = next.vertical_velocity - phys.gravity * dt;
        double z_new = state.position.z + w * dt;
        next.position = target;
        next.position.z = z_new;
        next.vertical_velocity = w;
        next.airborne = true;
        if (w < 0.0) {
            auto top = ground_height_at(track, target.x, target.y, state.position.z + 1e-9,
                                        phys.landing_tolerance, cfg);
            if (top && z_new <= *top) {
                next.position.z = *top;
                next.vertical_velocity = 0.0;
                next.airborne = false;
            }
        }
        ev.airtime_step = next.airborne;
    }

    ev.progress_delta = detect_progress(state.position, next.position, goal);

    if (!track.blocks.empty()) {
        const PlatformBlock& newest = track.blocks.back();
        Obb footprint{newest.center, 0.5 * newest.size, 0.5 * newest.size, 1.0, newest.yaw_deg};
        ev.reached_segment_frontier = footprint.contains_xy(next.position);
    }

    Vec3 d = goal - next.position;
    bool at_goal = d.norm_xy() <= phys.goal_radius && std::abs(d.z) <= phys.goal_z_tolerance;
    bool fell = next.position.z < lowest_block_top(track) - phys.fall_margin;
    if (at_goal) {
        ev.reached_goal = true;
    } else if (fell) {
        ev.fell = true;
    } else if (next.elapsed_steps >= phys.max_steps_platform) {
        ev.timed_out = true;
    }
    return {next, ev};
}

std::pair<AgentState, StepEvents> step_vehicle(const AgentState& state, const VehicleAction& action,
                                               const TrackState& track, const Vec3& goal,
                                               const PhysicsConfig& phys, const TrackConfig& cfg) {
    AgentState next = state;
    StepEvents ev;
    next.elapsed_steps = state.elapsed_steps + 1;

    const double dt = phys.dt;
    const double throttle = clamp_unit(action.throttle);
    const double turn = clamp_unit(action.turn);

    if (!state.airborne) {
        next.speed = std::clamp(state.speed + throttle * phys.accel_max * dt, 0.0, phys.speed_max);

        RoadSample here = project_to_road(track, state.position, state.road_hint);
        double kappa_cmd = turn * phys.steer_curvature_max;  // >0 turns left (CCW)
        double kappa_eff = 0.0;
        if (kappa_cmd != 0.0 && next.speed > 1e-9) {
            // Banking adds grip when it leans into the commanded turn, removes
            // it otherwise. Understeer: curvature saturates at grip/v^2.
            double favorable = here.banking_deg * (kappa_cmd > 0.0 ? 1.0 : -1.0);
            double grip = std::max(0.5, phys.grip_base + phys.grip_bank_per_deg * favorable);
            double kappa_limit = grip / (next.speed * next.speed);
            kappa_eff = std::copysign(std::min(std::abs(kappa_cmd), kappa_limit), kappa_cmd);
        }
        double yaw_rate_rad = kappa_eff * next.speed;
        next.yaw_rate_deg = rad_to_deg(yaw_rate_rad);
        next.heading_deg = wrap_degrees(state.heading_deg + next.yaw_rate_deg * dt);
    } else {
        // No control authority in the air; heading and speed carry over.
        next.yaw_rate_deg = 0.0;
    }

    Vec3 fwd = heading_unit(next.heading_deg);
    next.position = state.position + fwd * (next.speed * dt);

    RoadSample proj = project_to_road(track, next.position, state.road_hint);
    next.road_hint = proj.segment;

    // Vertical: follow the surface unless ballistic motion wins (crests, jumps).
    double w_ball = state.vertical_velocity - phys.gravity * dt;
    double z_ball = state.position.z + w_ball * dt;
    if (!state.airborne && z_ball <= proj.road_z + 1e-9) {
        next.position.z = proj.road_z;
        next.vertical_velocity = (proj.road_z - state.position.z) / dt;
        next.airborne = false;
    } else {
        next.position.z = z_ball;
        next.vertical_velocity = w_ball;
        next.airborne = true;
        if (w_ball < 0.0 && z_ball <= proj.road_z) {
            next.position.z = proj.road_z;
            next.vertical_velocity = 0.0;
            next.airborne = false;
        }
    }
    ev.airtime_step = next.airborne && (next.position.z - proj.road_z) > phys.air_threshold;

    // Waypoints carry no height; racing progress and arrival are planar.
    ev.progress_delta = (goal - state.position).norm_xy() - (goal - next.position).norm_xy();
    ev.reached_segment_frontier =
        (track.total_road_length() - proj.s_total) < phys.frontier_margin;

    // Lateral escape or dropping below the ribbon ends the run. Height above
    // the road is not an exit: crest launches are part of the game and the
    // airtime accounting.
    bool off = std::abs(proj.lateral) > cfg.road_half_width ||
               (proj.road_z - next.position.z) > cfg.road_vertical_half + 2.0;
    bool at_goal = (goal - next.position).norm_xy() <= phys.waypoint_radius;
    if (at_goal) {
        ev.reached_goal = true;
    } else if (off) {
        ev.off_track = true;
    } else if (next.elapsed_steps >= phys.max_steps_racing) {
        ev.timed_out = true;
    }
    return {next, ev};
}

}  // namespace tracksmith
