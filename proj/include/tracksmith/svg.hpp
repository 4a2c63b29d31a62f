#pragma once

#include <string>
#include <vector>

#include "tracksmith/track.hpp"

namespace tracksmith {

// Plan-view rendering. Blocks are drawn as rotated squares shaded by height,
// roads as a tessellated ribbon, goals as circles. World +y points up on the
// page. A non-empty title (say "aux=-0.50") becomes the document title.
std::string render_track_svg(const TrackState& track, const TrackConfig& cfg,
                             const std::vector<Vec3>& goals = {},
                             const std::string& title = {});

void save_track_svg(const TrackState& track, const TrackConfig& cfg, const std::string& path,
                    const std::vector<Vec3>& goals = {}, const std::string& title = {});

}  // namespace tracksmith
