#include "tracksmith/geom.hpp"

#include <algorithm>

namespace tracksmith {

bool Obb::contains(const Vec3& p, double inflate) const {
    const Vec3 local = rotate_z(p - center, -yaw_deg);
    return std::abs(local.x) <= half_x + inflate &&
           std::abs(local.y) <= half_y + inflate &&
           std::abs(local.z) <= half_z + inflate;
}

bool Obb::contains_xy(const Vec3& p, double inflate) const {
    const Vec3 local = rotate_z(p - center, -yaw_deg);
    return std::abs(local.x) <= half_x + inflate &&
           std::abs(local.y) <= half_y + inflate;
}

double ray_obb(const Vec3& origin, const Vec3& dir, const Obb& box, double max_dist) {
    const Vec3 o = rotate_z(origin - box.center, -box.yaw_deg);
    const Vec3 d = rotate_z(dir, -box.yaw_deg);

    double tmin = 0.0;
    double tmax = max_dist;
    const double ov[3] = {o.x, o.y, o.z};
    const double dv[3] = {d.x, d.y, d.z};
    const double hv[3] = {box.half_x, box.half_y, box.half_z};

    for (int a = 0; a < 3; ++a) {
        if (std::abs(dv[a]) < 1e-12) {
            if (std::abs(ov[a]) > hv[a]) return max_dist;
            continue;
        }
        double t1 = (-hv[a] - ov[a]) / dv[a];
        double t2 = (hv[a] - ov[a]) / dv[a];
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return max_dist;
    }
    return tmin;
}

}  // namespace tracksmith
