#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "tracksmith/selfplay.hpp"

namespace tracksmith {

struct TrackIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Track files store segment specs plus the build config; geometry is rebuilt
// on load by replaying the placements, which is exact by construction. `seed`
// records the RNG seed the track came from, when there is one.
void save_track(const TrackState& track, const TrackConfig& cfg, const std::string& path,
                std::optional<std::uint64_t> seed = std::nullopt);
TrackState load_track(const std::string& path, TrackConfig* cfg_out = nullptr);

// Replay logs are JSONL: a header line (configs, goals, aux, initial track),
// then one line per event (generator emission or solver step) with the action
// and the resulting agent state.
void save_replay(const ReplayLog& log, const std::string& path);
ReplayLog load_replay(const std::string& path);

struct ReplayVerifyResult {
    bool ok = true;
    long long first_mismatch = -1;  // line index among step lines
    std::string message;
};

// Re-simulates the logged actions through the physics and compares every
// stored agent state bit for bit.
ReplayVerifyResult verify_replay(const std::string& path);

}  // namespace tracksmith
