#pragma once

// Private JSON helpers shared by config.cpp, checkpoint.cpp and track_io.cpp.
// Strict object readers: every consumed key is remembered, leftovers error.

#include <set>
#include <string>

#include <json.hpp>

#include "tracksmith/config.hpp"

namespace tracksmith {
namespace cfgjson {

using nlohmann::json;

class Fields {
public:
    Fields(const json& j, std::string ctx) : j_(j), ctx_(std::move(ctx)) {
        if (!j_.is_object()) throw ConfigError(ctx_ + ": expected a JSON object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            it->get_to(out);
        } catch (const json::exception& e) {
            throw ConfigError(ctx_ + "." + key + ": " + e.what());
        }
    }

    bool has(const char* key) {
        seen_.insert(key);
        return j_.contains(key);
    }

    const json& at(const char* key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.count(k)) throw ConfigError(ctx_ + ": unknown key '" + k + "'");
        }
    }

private:
    const json& j_;
    std::string ctx_;
    std::set<std::string> seen_;
};

inline json track_to_json(const TrackConfig& c) {
    return json{{"road_half_width", c.road_half_width},
                {"banking_gain", c.banking_gain},
                {"banking_cap_deg", c.banking_cap_deg},
                {"block_thickness", c.block_thickness},
                {"road_vertical_half", c.road_vertical_half},
                {"strip_length", c.strip_length},
                {"start_block_size", c.start_block_size},
                {"start_road_length", c.start_road_length},
                {"ray_count", c.ray_count},
                {"ray_fan_deg", c.ray_fan_deg},
                {"ray_max_dist", c.ray_max_dist},
                {"obs_distance_scale", c.obs_distance_scale},
                {"collision_sample_step", c.collision_sample_step}};
}

inline void track_from_json(const json& j, TrackConfig& c, const std::string& ctx) {
    Fields f(j, ctx);
    f.get("road_half_width", c.road_half_width);
    f.get("banking_gain", c.banking_gain);
    f.get("banking_cap_deg", c.banking_cap_deg);
    f.get("block_thickness", c.block_thickness);
    f.get("road_vertical_half", c.road_vertical_half);
    f.get("strip_length", c.strip_length);
    f.get("start_block_size", c.start_block_size);
    f.get("start_road_length", c.start_road_length);
    f.get("ray_count", c.ray_count);
    f.get("ray_fan_deg", c.ray_fan_deg);
    f.get("ray_max_dist", c.ray_max_dist);
    f.get("obs_distance_scale", c.obs_distance_scale);
    f.get("collision_sample_step", c.collision_sample_step);
    f.finish();
}

inline json phys_to_json(const PhysicsConfig& c) {
    return json{{"dt", c.dt},
                {"walk_speed", c.walk_speed},
                {"turn_rate_deg", c.turn_rate_deg},
                {"jump_speed", c.jump_speed},
                {"gravity", c.gravity},
                {"step_height", c.step_height},
                {"landing_tolerance", c.landing_tolerance},
                {"fall_margin", c.fall_margin},
                {"max_steps_platform", c.max_steps_platform},
                {"goal_radius", c.goal_radius},
                {"goal_z_tolerance", c.goal_z_tolerance},
                {"accel_max", c.accel_max},
                {"speed_max", c.speed_max},
                {"steer_curvature_max", c.steer_curvature_max},
                {"grip_base", c.grip_base},
                {"grip_bank_per_deg", c.grip_bank_per_deg},
                {"air_threshold", c.air_threshold},
                {"max_steps_racing", c.max_steps_racing},
                {"waypoint_radius", c.waypoint_radius},
                {"frontier_margin", c.frontier_margin}};
}

inline void phys_from_json(const json& j, PhysicsConfig& c, const std::string& ctx) {
    Fields f(j, ctx);
    f.get("dt", c.dt);
    f.get("walk_speed", c.walk_speed);
    f.get("turn_rate_deg", c.turn_rate_deg);
    f.get("jump_speed", c.jump_speed);
    f.get("gravity", c.gravity);
    f.get("step_height", c.step_height);
    f.get("landing_tolerance", c.landing_tolerance);
    f.get("fall_margin", c.fall_margin);
    f.get("max_steps_platform", c.max_steps_platform);
    f.get("goal_radius", c.goal_radius);
    f.get("goal_z_tolerance", c.goal_z_tolerance);
    f.get("accel_max", c.accel_max);
    f.get("speed_max", c.speed_max);
    f.get("steer_curvature_max", c.steer_curvature_max);
    f.get("grip_base", c.grip_base);
    f.get("grip_bank_per_deg", c.grip_bank_per_deg);
    f.get("air_threshold", c.air_threshold);
    f.get("max_steps_racing", c.max_steps_racing);
    f.get("waypoint_radius", c.waypoint_radius);
    f.get("frontier_margin", c.frontier_margin);
    f.finish();
}

inline json vec3_to_json(const Vec3& v) { return json{v.x, v.y, v.z}; }

inline Vec3 vec3_from_json(const json& j) {
    Vec3 v;
    j.at(0).get_to(v.x);
    j.at(1).get_to(v.y);
    j.at(2).get_to(v.z);
    return v;
}

// Specs plus goal and obstacles; geometry rebuilds from these exactly.
inline json track_state_to_json(const TrackState& t) {
    json j;
    j["game"] = game_to_string(t.game);
    json specs = json::array();
    if (t.game == GameKind::platform) {
        for (const PlatformSegmentSpec& s : t.platform_specs) {
            specs.push_back(json{s.distance, s.angle, s.size, s.height_delta});
        }
    } else {
        for (const RaceSegmentSpec& s : t.race_specs) {
            specs.push_back(json{s.length, s.curve, s.height_delta});
        }
    }
    j["specs"] = std::move(specs);
    j["goal"] = vec3_to_json(t.goal);
    json obstacles = json::array();
    for (const Obb& o : t.obstacles) {
        obstacles.push_back(json{o.center.x, o.center.y, o.center.z, o.half_x, o.half_y, o.half_z,
                                 o.yaw_deg});
    }
    j["obstacles"] = std::move(obstacles);
    j["collision"] = t.terminated_by_collision;
    return j;
}

inline TrackState track_state_from_json(const json& j, const TrackConfig& cfg) {
    GameKind game = game_from_string(j.at("game").get<std::string>());
    TrackState t = game == GameKind::platform ? make_platform_track(cfg) : make_race_track(cfg);
    for (const json& s : j.at("specs")) {
        if (game == GameKind::platform) {
            PlatformSegmentSpec ps{s.at(0).get<double>(), s.at(1).get<double>(),
                                   s.at(2).get<double>(), s.at(3).get<double>()};
            append_platform_segment(t, ps, platform_bearing(t, 0.0));
        } else {
            RaceSegmentSpec rs{s.at(0).get<double>(), s.at(1).get<double>(),
                               s.at(2).get<double>()};
            extend_race_track(t, rs, cfg);
        }
    }
    t.goal = vec3_from_json(j.at("goal"));
    for (const json& o : j.at("obstacles")) {
        t.obstacles.push_back(Obb{Vec3{o.at(0).get<double>(), o.at(1).get<double>(),
                                       o.at(2).get<double>()},
                                  o.at(3).get<double>(), o.at(4).get<double>(),
                                  o.at(5).get<double>(), o.at(6).get<double>()});
    }
    return t;
}

}  // namespace cfgjson
}  // namespace tracksmith
