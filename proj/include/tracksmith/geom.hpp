#pragma once

#include <cmath>
#include <cstdint>

namespace tracksmith {

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

// Normalize to (-180, 180].
inline double wrap_degrees(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    double norm_xy() const { return std::sqrt(x * x + y * y); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Unit vector in the horizontal plane for a heading in degrees (CCW from +x, z-up).
inline Vec3 heading_unit(double heading_deg) {
    const double r = deg_to_rad(heading_deg);
    return {std::cos(r), std::sin(r), 0.0};
}

// Rotate (x, y) by yaw degrees about +z.
inline Vec3 rotate_z(const Vec3& v, double yaw_deg) {
    const double r = deg_to_rad(yaw_deg);
    const double c = std::cos(r);
    const double s = std::sin(r);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

// Position and horizontal heading of a track frame.
struct Pose {
    Vec3 position;
    double heading_deg = 0.0;
};

// Express a world-frame point in a pose's local frame (x forward, y left).
inline Vec3 to_local(const Pose& frame, const Vec3& world) {
    return rotate_z(world - frame.position, -frame.heading_deg);
}

// Oriented box, yaw about +z only. Used for blocks, road strips and obstacles.
struct Obb {
    Vec3 center;
    double half_x = 0.0;
    double half_y = 0.0;
    double half_z = 0.0;
    double yaw_deg = 0.0;

    bool contains(const Vec3& p, double inflate = 0.0) const;
    // Horizontal footprint test only (ignores z).
    bool contains_xy(const Vec3& p, double inflate = 0.0) const;
};

// Distance along the ray to the box, max_dist if no hit, 0 if origin is inside.
double ray_obb(const Vec3& origin, const Vec3& dir, const Obb& box, double max_dist);

}  // namespace tracksmith
