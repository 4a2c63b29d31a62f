#include "tracksmith/observation.hpp"

#include <algorithm>
#include <cmath>

namespace tracksmith {

namespace {

constexpr int kGridHalf = 2;           // 5x5 height grid
constexpr double kGridSpacing = 2.0;   // meters between samples
constexpr double kGridForwardBias = 2.0;
constexpr double kHeightScale = 10.0;
constexpr double kProbeMax = 50.0;

void push_goal_block(std::vector<double>& obs, const Pose& frame, const Vec3& goal, double scale) {
    Vec3 local = to_local(frame, goal);
    obs.push_back(local.x / scale);
    obs.push_back(local.y / scale);
    obs.push_back(local.z / scale);
    obs.push_back(rad_to_deg(std::atan2(local.y, local.x)) / 180.0);
    obs.push_back(std::min(local.norm() / scale, 2.0));
}

}  // namespace

Pose frontier_pose(const TrackState& track) {
    if (track.game == GameKind::platform) {
        return Pose{track.blocks.back().center, platform_bearing(track, 0.0)};
    }
    return track.arcs.back().end;
}

int generator_obs_dim(GameKind game, int n_aux, const TrackConfig& cfg) {
    if (game == GameKind::platform) return 5 + 3 + 2 + n_aux;
    return 5 + n_aux + cfg.ray_count;
}

int solver_obs_dim(GameKind game, const TrackConfig& cfg) {
    int grid = (2 * kGridHalf + 1) * (2 * kGridHalf + 1);
    if (game == GameKind::platform) return 5 + 3 + grid;
    return 5 + 6 + cfg.ray_count;
}

std::vector<double> build_generator_obs(const TrackState& track, const std::vector<double>& aux,
                                        const TrackConfig& cfg) {
    std::vector<double> obs;
    Pose frame = frontier_pose(track);
    push_goal_block(obs, frame, track.goal, cfg.obs_distance_scale);

    if (track.game == GameKind::platform) {
        const PlatformBlock& newest = track.blocks.back();
        if (track.blocks.size() >= 2) {
            const PlatformBlock& prev = track.blocks[track.blocks.size() - 2];
            Vec3 rel = to_local(frame, prev.center);
            obs.push_back(rel.x / cfg.obs_distance_scale);
            obs.push_back(rel.y / cfg.obs_distance_scale);
            obs.push_back(rel.z / cfg.obs_distance_scale);
            obs.push_back(newest.size - 5.0);
            obs.push_back(wrap_degrees(newest.yaw_deg - prev.yaw_deg) / 180.0);
        } else {
            obs.insert(obs.end(), 5, 0.0);
        }
        obs.insert(obs.end(), aux.begin(), aux.end());
    } else {
        obs.insert(obs.end(), aux.begin(), aux.end());
        // Fan over everything built before the last two segments so the
        // generator can see what it might loop back into.
        int skip_from = std::max(0, static_cast<int>(track.arcs.size()) - 2);
        Vec3 origin = frame.position;
        origin.z += 1.0;
        for (int i = 0; i < cfg.ray_count; ++i) {
            double frac = cfg.ray_count == 1 ? 0.5 : static_cast<double>(i) / (cfg.ray_count - 1);
            double ang = frame.heading_deg - 0.5 * cfg.ray_fan_deg + frac * cfg.ray_fan_deg;
            double d = raycast_excluding(track, origin, heading_unit(ang), cfg.ray_max_dist,
                                         skip_from);
            obs.push_back(d / cfg.ray_max_dist);
        }
    }
    return obs;
}

std::vector<double> build_solver_obs(const TrackState& track, const AgentState& agent,
                                     const Vec3& goal, const TrackConfig& cfg,
                                     const PhysicsConfig& phys) {
    std::vector<double> obs;
    Pose frame{agent.position, agent.heading_deg};
    push_goal_block(obs, frame, goal, cfg.obs_distance_scale);

    if (track.game == GameKind::platform) {
        obs.push_back(agent.speed / phys.walk_speed);
        obs.push_back(std::clamp(agent.vertical_velocity / kHeightScale, -1.0, 1.0));
        obs.push_back(agent.airborne ? 1.0 : 0.0);
        // Height grid, forward-biased. Missing ground reads as a deep drop.
        Vec3 fwd = heading_unit(agent.heading_deg);
        Vec3 left{-fwd.y, fwd.x, 0.0};
        for (int i = -kGridHalf; i <= kGridHalf; ++i) {
            for (int j = -kGridHalf; j <= kGridHalf; ++j) {
                double fx = i * kGridSpacing + kGridForwardBias;
                double ly = j * kGridSpacing;
                Vec3 p = agent.position + fwd * fx + left * ly;
                double rel = -1.0;
                auto ground = ground_height_at(track, p.x, p.y, agent.position.z + 2.5, 0.0, cfg);
                if (ground) rel = std::clamp((*ground - agent.position.z) / kHeightScale, -1.0, 1.0);
                obs.push_back(rel);
            }
        }
    } else {
        RoadSample proj = project_to_road(track, agent.position, agent.road_hint);
        obs.push_back(agent.speed / phys.speed_max);
        obs.push_back(std::clamp(agent.yaw_rate_deg / 180.0, -1.0, 1.0));
        obs.push_back(std::clamp(proj.lateral / cfg.road_half_width, -2.0, 2.0));
        obs.push_back(wrap_degrees(proj.road_heading_deg - agent.heading_deg) / 180.0);
        obs.push_back(proj.banking_deg / cfg.banking_cap_deg);
        obs.push_back(agent.airborne ? 1.0 : 0.0);
        for (int i = 0; i < cfg.ray_count; ++i) {
            double frac = cfg.ray_count == 1 ? 0.5 : static_cast<double>(i) / (cfg.ray_count - 1);
            double ang = agent.heading_deg - 0.5 * cfg.ray_fan_deg + frac * cfg.ray_fan_deg;
            double d = road_edge_probe(track, agent.position, ang, kProbeMax, proj.segment);
            obs.push_back(d / kProbeMax);
        }
    }
    return obs;
}

}  // namespace tracksmith
