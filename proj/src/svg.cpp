#include "tracksmith/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tracksmith {

namespace {

struct Bounds {
    double min_x = 1e30, min_y = 1e30, max_x = -1e30, max_y = -1e30;

    void add(double x, double y) {
        min_x = std::min(min_x, x);
        min_y = std::min(min_y, y);
        max_x = std::max(max_x, x);
        max_y = std::max(max_y, y);
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Page y grows downward, so world y is negated everywhere.
std::string pt(double x, double y) { return fmt(x) + "," + fmt(-y); }

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

// Height to a blue-to-red shade; the range in play is a few meters.
std::string height_color(double z, double z_min, double z_max) {
    double t = z_max > z_min ? (z - z_min) / (z_max - z_min) : 0.5;
    int r = static_cast<int>(60 + 170 * t);
    int g = 90;
    int b = static_cast<int>(230 - 170 * t);
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

std::vector<Vec3> block_corners(const PlatformBlock& b) {
    std::vector<Vec3> c;
    double h = 0.5 * b.size;
    for (auto [dx, dy] : {std::pair{h, h}, {-h, h}, {-h, -h}, {h, -h}}) {
        c.push_back(b.center + rotate_z(Vec3{dx, dy, 0.0}, b.yaw_deg));
    }
    return c;
}

}  // namespace

std::string render_track_svg(const TrackState& track, const TrackConfig& cfg,
                             const std::vector<Vec3>& goals, const std::string& title) {
    (void)cfg;
    Bounds bb;
    double z_min = 1e30, z_max = -1e30;
    for (const PlatformBlock& b : track.blocks) {
        for (const Vec3& c : block_corners(b)) bb.add(c.x, c.y);
        z_min = std::min(z_min, b.center.z);
        z_max = std::max(z_max, b.center.z);
    }
    struct Ribbon {
        std::vector<Vec3> left, right;
        double z0 = 0.0, z1 = 0.0;
    };
    std::vector<Ribbon> ribbons;
    for (const RoadArc& arc : track.arcs) {
        Ribbon rb;
        int n = std::max(2, static_cast<int>(std::ceil(arc.length)));
        for (int i = 0; i <= n; ++i) {
            Pose p = arc.at(arc.length * i / n);
            Vec3 left_dir = heading_unit(p.heading_deg + 90.0);
            Vec3 l = p.position + left_dir * arc.half_width;
            Vec3 r = p.position - left_dir * arc.half_width;
            rb.left.push_back(l);
            rb.right.push_back(r);
            bb.add(l.x, l.y);
            bb.add(r.x, r.y);
        }
        rb.z0 = arc.start.position.z;
        rb.z1 = arc.end.position.z;
        z_min = std::min({z_min, rb.z0, rb.z1});
        z_max = std::max({z_max, rb.z0, rb.z1});
        ribbons.push_back(std::move(rb));
    }
    std::vector<Vec3> marks = goals;
    if (marks.empty()) marks.push_back(track.goal);
    for (const Vec3& g : marks) bb.add(g.x, g.y);
    if (bb.min_x > bb.max_x) bb.add(0.0, 0.0);

    const double margin = 10.0;
    double w = bb.max_x - bb.min_x + 2 * margin;
    double h = bb.max_y - bb.min_y + 2 * margin;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << fmt(bb.min_x - margin) << " "
        << fmt(-bb.max_y - margin) << " " << fmt(w) << " " << fmt(h) << "\">\n";
    if (!title.empty()) out << "<title>" << xml_escape(title) << "</title>\n";
    out << "<rect x=\"" << fmt(bb.min_x - margin) << "\" y=\"" << fmt(-bb.max_y - margin)
        << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h) << "\" fill=\"#f7f7f2\"/>\n";

    for (const Ribbon& rb : ribbons) {
        out << "<polygon points=\"";
        for (const Vec3& p : rb.left) out << pt(p.x, p.y) << " ";
        for (auto it = rb.right.rbegin(); it != rb.right.rend(); ++it) out << pt(it->x, it->y) << " ";
        out << "\" fill=\"" << height_color(0.5 * (rb.z0 + rb.z1), z_min, z_max)
            << "\" stroke=\"#222\" stroke-width=\"0.4\" fill-opacity=\"0.85\"/>\n";
    }
    for (std::size_t i = 0; i < track.blocks.size(); ++i) {
        const PlatformBlock& b = track.blocks[i];
        out << "<polygon points=\"";
        for (const Vec3& c : block_corners(b)) out << pt(c.x, c.y) << " ";
        out << "\" fill=\"" << height_color(b.center.z, z_min, z_max)
            << "\" stroke=\"#222\" stroke-width=\"0.3\" fill-opacity=\"0.9\"/>\n";
        if (i == 0) {
            out << "<circle cx=\"" << fmt(b.center.x) << "\" cy=\"" << fmt(-b.center.y)
                << "\" r=\"1.2\" fill=\"#1a7d1a\"/>\n";
        }
    }
    if (track.game == GameKind::racing && !track.arcs.empty()) {
        const Vec3& s = track.arcs.front().start.position;
        out << "<circle cx=\"" << fmt(s.x) << "\" cy=\"" << fmt(-s.y)
            << "\" r=\"1.5\" fill=\"#1a7d1a\"/>\n";
    }
    for (std::size_t i = 0; i < marks.size(); ++i) {
        const Vec3& g = marks[i];
        bool final = i + 1 == marks.size();
        out << "<circle cx=\"" << fmt(g.x) << "\" cy=\"" << fmt(-g.y) << "\" r=\""
            << (final ? "2.0" : "1.2") << "\" fill=\"none\" stroke=\""
            << (final ? "#c01818" : "#c08018") << "\" stroke-width=\"0.6\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

void save_track_svg(const TrackState& track, const TrackConfig& cfg, const std::string& path,
                    const std::vector<Vec3>& goals, const std::string& title) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write svg file: " + path);
    out << render_track_svg(track, cfg, goals, title);
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace tracksmith
