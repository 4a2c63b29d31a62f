#pragma once

#include <vector>

#include "tracksmith/physics.hpp"
#include "tracksmith/track.hpp"

namespace tracksmith {

// Observation layouts are fixed per game and documented in docs/formats.md.
// Every entry is normalized into roughly [-1, 1]; distances divide by
// obs_distance_scale, angles by 180. Layout changes invalidate checkpoints.

int generator_obs_dim(GameKind game, int n_aux, const TrackConfig& cfg);
int solver_obs_dim(GameKind game, const TrackConfig& cfg);

// Generator observes the build frontier: goal direction in the frame of the
// last placed piece, a summary of the previous placement, and its aux inputs.
// Racing adds a raycast fan over older geometry for self-collision awareness.
std::vector<double> build_generator_obs(const TrackState& track, const std::vector<double>& aux,
                                        const TrackConfig& cfg);

// Solver observes the goal in its own frame plus proprioception, then local
// geometry: a 5x5 height grid (platform) or road-edge probes (racing).
std::vector<double> build_solver_obs(const TrackState& track, const AgentState& agent,
                                     const Vec3& goal, const TrackConfig& cfg,
                                     const PhysicsConfig& phys);

// Pose of the build frontier: newest block center with the current bearing
// (platform) or the end pose of the last arc (racing).
Pose frontier_pose(const TrackState& track);

}  // namespace tracksmith
