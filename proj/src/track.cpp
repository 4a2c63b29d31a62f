#include "tracksmith/track.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tracksmith {

namespace {

constexpr double kCurveEps = 1e-9;

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

Obb block_obb(const PlatformBlock& b, double thickness) {
    Obb box;
    box.center = {b.center.x, b.center.y, b.center.z - 0.5 * thickness};
    box.half_x = 0.5 * b.size;
    box.half_y = 0.5 * b.size;
    box.half_z = 0.5 * thickness;
    box.yaw_deg = b.yaw_deg;
    return box;
}

// Tessellate an arc's ribbon into oriented boxes. Chord error at 1 m strips
// is sub-millimeter for the curvature range in play.
template <typename Fn>
void for_each_strip(const RoadArc& arc, double strip_length, Fn&& fn) {
    const int n = std::max(1, static_cast<int>(std::ceil(arc.length / strip_length)));
    const double ds = arc.length / n;
    for (int i = 0; i < n; ++i) {
        const double s0 = i * ds;
        const Pose mid = arc.at(s0 + 0.5 * ds);
        Obb box;
        box.center = mid.position;
        box.half_x = 0.5 * ds;
        box.half_y = arc.half_width;
        box.half_z = arc.vertical_half;
        box.yaw_deg = mid.heading_deg;
        fn(box);
    }
}

struct ArcProjection {
    double dist3 = std::numeric_limits<double>::infinity();
    double s = 0.0;
    double lateral = 0.0;
    Pose center;
};

// Closest centerline point of one arc to p; s clamped to [0, length].
ArcProjection project_to_arc(const RoadArc& arc, const Vec3& p) {
    ArcProjection out;
    const double hr = deg_to_rad(arc.start.heading_deg);
    if (std::abs(arc.curve_deg) < kCurveEps) {
        const Vec3 d = p - arc.start.position;
        const double fwd = d.x * std::cos(hr) + d.y * std::sin(hr);
        out.s = clamp(fwd, 0.0, arc.length);
        out.lateral = -d.x * std::sin(hr) + d.y * std::cos(hr);
    } else {
        const double kappa = deg_to_rad(arc.curve_deg) / arc.length;
        const double radius = 1.0 / std::abs(kappa);
        const double side = arc.curve_deg > 0 ? 1.0 : -1.0;
        const Vec3 center = arc.start.position + heading_unit(arc.start.heading_deg + side * 90.0) * radius;
        const double vx = p.x - center.x;
        const double vy = p.y - center.y;
        const double r = std::sqrt(vx * vx + vy * vy);
        const double phi = std::atan2(vy, vx);
        const Vec3 s0 = arc.start.position - center;
        const double phi0 = std::atan2(s0.y, s0.x);
        // Sweep angle from the arc start, in the direction of travel.
        double sweep = side * (phi - phi0);
        sweep = std::fmod(sweep, 2.0 * kPi);
        if (sweep < 0) sweep += 2.0 * kPi;
        const double total = std::abs(deg_to_rad(arc.curve_deg));
        double s = sweep * radius;
        if (sweep > total) {
            // Behind the span: snap to whichever endpoint is closer in angle.
            const double over = sweep - total;
            const double under = 2.0 * kPi - sweep;
            s = (over < under) ? arc.length : 0.0;
        }
        out.s = s;
        out.lateral = side * (radius - r);
    }
    out.center = arc.at(out.s);
    const Vec3 diff = p - out.center.position;
    out.dist3 = diff.norm();
    return out;
}

}  // namespace

PlatformSegmentSpec clamp_spec(const PlatformSegmentSpec& raw) {
    PlatformSegmentSpec s;
    s.distance = clamp(raw.distance, 5.0, 10.0);
    s.angle = clamp(raw.angle, -180.0, 180.0);
    s.size = clamp(raw.size, 4.0, 6.0);
    s.height_delta = clamp(raw.height_delta, -2.0, 2.0);
    return s;
}

RaceSegmentSpec clamp_spec(const RaceSegmentSpec& raw) {
    RaceSegmentSpec s;
    s.length = clamp(raw.length, 20.0, 30.0);
    s.curve = clamp(raw.curve, -30.0, 30.0);
    s.height_delta = clamp(raw.height_delta, -5.0, 5.0);
    return s;
}

Pose RoadArc::at(double s) const {
    Pose p;
    const double frac = length > 0 ? s / length : 0.0;
    p.position.z = start.position.z + frac * height_delta;
    const double hr = deg_to_rad(start.heading_deg);
    const double kappa = length > 0 ? deg_to_rad(curve_deg) / length : 0.0;
    // Chord form: the offset is s * sinc(kappa*s/2) along the mid heading.
    // Stable for every curvature; the naive (sin(th) - sin(hr)) / kappa
    // cancels catastrophically as kappa -> 0.
    const double half = 0.5 * kappa * s;
    const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
    const double mid = hr + half;
    p.position.x = start.position.x + s * std::cos(mid) * sinc;
    p.position.y = start.position.y + s * std::sin(mid) * sinc;
    p.heading_deg = start.heading_deg + curve_deg * frac;
    return p;
}

PlatformBlock place_platform_segment(const PlatformBlock& prev, double prev_bearing_deg,
                                     const PlatformSegmentSpec& spec) {
    PlatformBlock block;
    const double yaw = prev_bearing_deg + spec.angle;
    block.center = prev.center + heading_unit(yaw) * spec.distance + Vec3{0.0, 0.0, spec.height_delta};
    block.size = spec.size;
    block.yaw_deg = yaw;
    return block;
}

TrackState make_platform_track(const TrackConfig& cfg) {
    TrackState t;
    t.game = GameKind::platform;
    PlatformBlock start;
    start.center = {0.0, 0.0, 0.0};
    start.size = cfg.start_block_size;
    start.yaw_deg = 0.0;
    t.blocks.push_back(start);
    return t;
}

double platform_bearing(const TrackState& track, double fallback_deg) {
    if (track.blocks.size() < 2) return fallback_deg;
    const Vec3& a = track.blocks[track.blocks.size() - 2].center;
    const Vec3& b = track.blocks.back().center;
    return rad_to_deg(std::atan2(b.y - a.y, b.x - a.x));
}

void append_platform_segment(TrackState& track, const PlatformSegmentSpec& raw_spec,
                             double current_bearing_deg) {
    const PlatformSegmentSpec spec = clamp_spec(raw_spec);
    track.blocks.push_back(place_platform_segment(track.blocks.back(), current_bearing_deg, spec));
    track.platform_specs.push_back(spec);
}

std::optional<double> ground_height_at(const TrackState& track, double x, double y,
                                       double z_max, double inflate, const TrackConfig& cfg) {
    (void)cfg;
    const Vec3 p{x, y, 0.0};
    std::optional<double> best;
    for (const auto& b : track.blocks) {
        if (b.center.z > z_max) continue;
        const double reach = 0.5 * b.size * 1.4143 + inflate;  // footprint bounding circle
        const double dx = x - b.center.x;
        const double dy = y - b.center.y;
        if (dx * dx + dy * dy > reach * reach) continue;
        Obb box;
        box.center = b.center;
        box.half_x = 0.5 * b.size;
        box.half_y = 0.5 * b.size;
        box.half_z = 1.0;
        box.yaw_deg = b.yaw_deg;
        if (!box.contains_xy(p, inflate)) continue;
        if (!best || b.center.z > *best) best = b.center.z;
    }
    return best;
}

double lowest_block_top(const TrackState& track) {
    double z = 0.0;
    for (const auto& b : track.blocks) z = std::min(z, b.center.z);
    return z;
}

RoadArc make_road_arc(const Pose& start, const RaceSegmentSpec& spec, const TrackConfig& cfg,
                      double s_begin) {
    RoadArc arc;
    arc.start = start;
    arc.length = spec.length;
    arc.curve_deg = spec.curve;
    arc.height_delta = spec.height_delta;
    arc.half_width = cfg.road_half_width;
    arc.vertical_half = cfg.road_vertical_half;
    arc.banking_deg = clamp(cfg.banking_gain * spec.curve, -cfg.banking_cap_deg, cfg.banking_cap_deg);
    arc.s_begin = s_begin;
    arc.end = arc.at(arc.length);
    arc.end.heading_deg = start.heading_deg + spec.curve;  // exact, avoids s/length rounding
    return arc;
}

TrackState make_race_track(const TrackConfig& cfg) {
    TrackState t;
    t.game = GameKind::racing;
    RaceSegmentSpec spawn;
    spawn.length = cfg.start_road_length;
    spawn.curve = 0.0;
    spawn.height_delta = 0.0;
    t.arcs.push_back(make_road_arc(Pose{}, spawn, cfg, 0.0));
    return t;
}

void extend_race_track(TrackState& track, const RaceSegmentSpec& raw_spec,
                       const TrackConfig& cfg) {
    if (track.terminated_by_collision) return;
    const RaceSegmentSpec spec = clamp_spec(raw_spec);
    const RoadArc& last = track.arcs.back();
    RoadArc arc = make_road_arc(last.end, spec, cfg, last.s_begin + last.length);
    track.arcs.push_back(arc);
    track.race_specs.push_back(spec);

    // Self-collision: probe the new centerline with a short horizontal ray fan
    // against everything but the new arc and its immediate predecessor. A hit
    // closer than half_width means the ribbons overlap (centerlines within one
    // road width); 0 means the probe point is inside older geometry.
    const int skip_from = static_cast<int>(track.arcs.size()) - 2;
    const int n_samples = std::max(2, static_cast<int>(std::ceil(arc.length / cfg.collision_sample_step)));
    for (int i = 0; i <= n_samples; ++i) {
        const Pose c = arc.at(arc.length * i / n_samples);
        for (int r = 0; r < 8; ++r) {
            const Vec3 dir = heading_unit(45.0 * r);
            const double d = raycast_excluding(track, c.position, dir, arc.half_width, skip_from);
            if (d < arc.half_width) {
                track.terminated_by_collision = true;
                return;
            }
        }
    }
}

RoadSample project_to_road(const TrackState& track, const Vec3& p, int hint_segment) {
    RoadSample out;
    const int n = static_cast<int>(track.arcs.size());
    if (n == 0) return out;

    auto consider = [&](int idx, ArcProjection& best_proj, int& best_idx) {
        const ArcProjection proj = project_to_arc(track.arcs[idx], p);
        if (proj.dist3 < best_proj.dist3) {
            best_proj = proj;
            best_idx = idx;
        }
    };

    ArcProjection best;
    int best_idx = -1;
    if (hint_segment >= 0) {
        for (int idx = std::max(0, hint_segment - 1); idx < std::min(n, hint_segment + 3); ++idx)
            consider(idx, best, best_idx);
        // Hint window is trusted only while the point stays near it.
        if (best_idx >= 0 && best.dist3 <= 2.0 * track.arcs[best_idx].half_width) {
            out.segment = best_idx;
        } else {
            best = ArcProjection{};
            best_idx = -1;
        }
    }
    if (best_idx < 0) {
        for (int idx = 0; idx < n; ++idx) {
            // Bounding-circle reject before the exact projection.
            const RoadArc& arc = track.arcs[idx];
            const Vec3 mid = arc.at(0.5 * arc.length).position;
            const double reach = 0.5 * arc.length + arc.half_width + 4.0;
            const Vec3 d = p - mid;
            if (d.norm() > reach + best.dist3) continue;
            consider(idx, best, best_idx);
        }
    }
    if (best_idx < 0) return out;

    const RoadArc& arc = track.arcs[best_idx];
    out.segment = best_idx;
    out.s_local = best.s;
    out.s_total = arc.s_begin + best.s;
    out.lateral = best.lateral;
    out.road_z = best.center.position.z;
    out.road_heading_deg = best.center.heading_deg;
    out.banking_deg = arc.banking_deg;
    out.on_road = std::abs(best.lateral) <= arc.half_width &&
                  std::abs(p.z - out.road_z) <= arc.vertical_half;
    return out;
}

double road_edge_probe(const TrackState& track, const Vec3& origin, double heading_deg,
                       double max_dist, int hint_segment) {
    const Vec3 dir = heading_unit(heading_deg);
    const double step = 2.0;
    double z = origin.z;
    double prev_t = 0.0;
    int hint = hint_segment;
    for (double t = step; t <= max_dist + 1e-9; t += step) {
        Vec3 p = origin + dir * t;
        p.z = z;
        const RoadSample s = project_to_road(track, p, hint);
        if (!s.on_road) {
            // Bisect between the last on-road sample and this one.
            double lo = prev_t, hi = t;
            for (int i = 0; i < 4; ++i) {
                const double m = 0.5 * (lo + hi);
                Vec3 q = origin + dir * m;
                q.z = z;
                if (project_to_road(track, q, hint).on_road) lo = m; else hi = m;
            }
            return 0.5 * (lo + hi);
        }
        z = s.road_z;  // follow the surface so sloped roads stay in tolerance
        hint = s.segment;
        prev_t = t;
    }
    return max_dist;
}

double raycast_excluding(const TrackState& track, const Vec3& origin, const Vec3& dir,
                         double max_dist, int skip_from_segment) {
    double best = max_dist;
    const TrackConfig cfg;  // strip tessellation density only
    int idx = 0;
    for (const auto& b : track.blocks) {
        if (skip_from_segment >= 0 && idx >= skip_from_segment) break;
        best = std::min(best, ray_obb(origin, dir, block_obb(b, cfg.block_thickness), best));
        ++idx;
    }
    idx = 0;
    for (const auto& arc : track.arcs) {
        if (skip_from_segment >= 0 && idx >= skip_from_segment) break;
        ++idx;
        // Cheap reject: ray can't reach the arc's bounding sphere.
        const Vec3 mid = arc.at(0.5 * arc.length).position;
        const double reach = 0.5 * arc.length + arc.half_width + arc.vertical_half + 2.0;
        const Vec3 rel = mid - origin;
        const double along = rel.dot(dir);
        const Vec3 closest = rel - dir * clamp(along, 0.0, best);
        if (closest.norm() > reach) continue;
        for_each_strip(arc, cfg.strip_length, [&](const Obb& strip) {
            best = std::min(best, ray_obb(origin, dir, strip, best));
        });
    }
    for (const auto& ob : track.obstacles)
        best = std::min(best, ray_obb(origin, dir, ob, best));
    return best;
}

double raycast(const TrackState& track, const Vec3& origin, const Vec3& dir, double max_dist) {
    return raycast_excluding(track, origin, dir, max_dist, -1);
}

}  // namespace tracksmith
