#include "tracksmith/track_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "config_json.hpp"

namespace tracksmith {

using nlohmann::json;

namespace {

constexpr const char* kTrackFormat = "tracksmith-track";
constexpr const char* kReplayFormat = "tracksmith-replay";
constexpr int kVersion = 1;

json parse_line(const std::string& line, const std::string& path, long long lineno) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        std::ostringstream ss;
        ss << path << ":" << lineno << ": " << e.what();
        throw TrackIoError(ss.str());
    }
}

void check_header(const json& j, const char* format, const std::string& path) {
    if (!j.is_object() || j.value("format", std::string()) != format) {
        throw TrackIoError(path + ": not a " + format + " file");
    }
    if (j.value("schema_version", -1) != kVersion) {
        throw TrackIoError(path + ": unsupported schema_version");
    }
}

// Exact comparison; the JSON round trip preserves every double bit for bit.
bool same_bits(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool same_state(const ReplayStep& s, const AgentState& a) {
    return same_bits(s.position.x, a.position.x) && same_bits(s.position.y, a.position.y) &&
           same_bits(s.position.z, a.position.z) && same_bits(s.heading_deg, a.heading_deg) &&
           same_bits(s.speed, a.speed) && same_bits(s.vertical_velocity, a.vertical_velocity) &&
           s.airborne == a.airborne;
}

}  // namespace

void save_track(const TrackState& track, const TrackConfig& cfg, const std::string& path,
                std::optional<std::uint64_t> seed) {
    json j = cfgjson::track_state_to_json(track);
    j["format"] = kTrackFormat;
    j["schema_version"] = kVersion;
    j["track_cfg"] = cfgjson::track_to_json(cfg);
    if (seed) j["seed"] = *seed;
    std::ofstream out(path);
    if (!out) throw TrackIoError("cannot write track file: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw TrackIoError("write failed: " + path);
}

TrackState load_track(const std::string& path, TrackConfig* cfg_out) {
    std::ifstream in(path);
    if (!in) throw TrackIoError("cannot open track file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    json j = parse_line(ss.str(), path, 1);
    check_header(j, kTrackFormat, path);
    TrackConfig cfg;
    try {
        cfgjson::track_from_json(j.at("track_cfg"), cfg, "track_cfg");
        if (cfg_out) *cfg_out = cfg;
        return cfgjson::track_state_from_json(j, cfg);
    } catch (const ConfigError& e) {
        throw TrackIoError(path + ": " + e.what());
    } catch (const json::exception& e) {
        throw TrackIoError(path + ": " + e.what());
    }
}

void save_replay(const ReplayLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw TrackIoError("cannot write replay file: " + path);
    json goals = json::array();
    for (const Vec3& g : log.goals) goals.push_back(cfgjson::vec3_to_json(g));
    json header{{"format", kReplayFormat},
                {"schema_version", kVersion},
                {"game", game_to_string(log.game)},
                {"track_cfg", cfgjson::track_to_json(log.track_cfg)},
                {"phys_cfg", cfgjson::phys_to_json(log.phys_cfg)},
                {"aux", log.aux},
                {"goals", std::move(goals)},
                {"track", cfgjson::track_state_to_json(log.initial_track)},
                {"success", log.success}};
    out << header.dump() << "\n";
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
        const ReplayStep& s = log.steps[i];
        json line{{"i", i}, {"g", s.generator}, {"a", s.action_env},
                  {"p", cfgjson::vec3_to_json(s.position)}, {"h", s.heading_deg},
                  {"s", s.speed}, {"w", s.vertical_velocity}, {"air", s.airborne},
                  {"e", s.events}};
        out << line.dump() << "\n";
    }
    if (!out) throw TrackIoError("write failed: " + path);
}

ReplayLog load_replay(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TrackIoError("cannot open replay file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw TrackIoError(path + ": empty file");
    json header = parse_line(line, path, 1);
    check_header(header, kReplayFormat, path);

    ReplayLog log;
    try {
        log.game = game_from_string(header.at("game").get<std::string>());
        cfgjson::track_from_json(header.at("track_cfg"), log.track_cfg, "track_cfg");
        cfgjson::phys_from_json(header.at("phys_cfg"), log.phys_cfg, "phys_cfg");
        header.at("aux").get_to(log.aux);
        for (const json& g : header.at("goals")) log.goals.push_back(cfgjson::vec3_from_json(g));
        log.initial_track = cfgjson::track_state_from_json(header.at("track"), log.track_cfg);
        log.success = header.at("success").get<bool>();
    } catch (const ConfigError& e) {
        throw TrackIoError(path + ": " + e.what());
    } catch (const json::exception& e) {
        throw TrackIoError(path + ": " + e.what());
    }

    long long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_line(line, path, lineno);
        ReplayStep s;
        try {
            if (j.at("i").get<std::size_t>() != log.steps.size()) {
                std::ostringstream ss;
                ss << path << ":" << lineno << ": step index out of sequence";
                throw TrackIoError(ss.str());
            }
            s.generator = j.at("g").get<bool>();
            j.at("a").get_to(s.action_env);
            s.position = cfgjson::vec3_from_json(j.at("p"));
            s.heading_deg = j.at("h").get<double>();
            s.speed = j.at("s").get<double>();
            s.vertical_velocity = j.at("w").get<double>();
            s.airborne = j.at("air").get<bool>();
            s.events = j.at("e").get<int>();
        } catch (const json::exception& e) {
            std::ostringstream ss;
            ss << path << ":" << lineno << ": " << e.what();
            throw TrackIoError(ss.str());
        }
        log.steps.push_back(std::move(s));
    }
    return log;
}

ReplayVerifyResult verify_replay(const std::string& path) {
    ReplayVerifyResult res;
    ReplayLog log;
    try {
        log = load_replay(path);
    } catch (const TrackIoError& e) {
        res.ok = false;
        res.message = e.what();
        return res;
    }
    if (log.goals.empty()) {
        res.ok = false;
        res.message = "replay has no goals";
        return res;
    }

    TrackState track = log.initial_track;
    std::size_t wp = 0;
    track.goal = log.goals[wp];

    AgentState agent;
    if (log.game == GameKind::platform) {
        Vec3 s = track.blocks.front().center;
        double bearing = rad_to_deg(std::atan2(log.goals[0].y - s.y, log.goals[0].x - s.x));
        agent = spawn_platform_agent(track, bearing);
    } else {
        agent = spawn_race_agent(track);
    }

    auto fail = [&res](long long idx, const std::string& msg) {
        res.ok = false;
        res.first_mismatch = idx;
        res.message = msg;
        return res;
    };

    bool collided = false;
    StepEvents last_ev;
    for (std::size_t i = 0; i < log.steps.size(); ++i) {
        const ReplayStep& s = log.steps[i];
        long long idx = static_cast<long long>(i);
        if (collided) return fail(idx, "steps recorded after a generator collision");
        if (s.generator) {
            // Emissions log the agent state as it stood when the segment went in.
            if (!same_state(s, agent)) return fail(idx, "generator step: agent state mismatch");
            if (log.game == GameKind::platform) {
                if (s.action_env.size() != 4) return fail(idx, "generator action arity");
                PlatformSegmentSpec spec{s.action_env[0], s.action_env[1], s.action_env[2],
                                         s.action_env[3]};
                append_platform_segment(track, spec, platform_bearing(track, 0.0));
            } else {
                if (s.action_env.size() != 3) return fail(idx, "generator action arity");
                RaceSegmentSpec spec{s.action_env[0], s.action_env[1], s.action_env[2]};
                extend_race_track(track, spec, log.track_cfg);
            }
            if (track.terminated_by_collision) collided = true;
            if (s.events != (collided ? kReplayCollision : 0)) {
                return fail(idx, "generator step: event mismatch");
            }
            continue;
        }
        if (s.action_env.size() != (log.game == GameKind::platform ? 3u : 2u)) {
            return fail(idx, "solver action arity");
        }
        AgentState next;
        StepEvents ev;
        if (log.game == GameKind::platform) {
            PlatformAction a{s.action_env[0], s.action_env[1], s.action_env[2] > 0.5};
            std::tie(next, ev) = step_platform(agent, a, track, log.goals[wp], log.phys_cfg,
                                               log.track_cfg);
        } else {
            VehicleAction a{s.action_env[0], s.action_env[1]};
            std::tie(next, ev) = step_vehicle(agent, a, track, log.goals[wp], log.phys_cfg,
                                              log.track_cfg);
        }
        if (ev.reached_goal && wp + 1 < log.goals.size()) {
            ev.reached_goal = false;
            ++wp;
            track.goal = log.goals[wp];
        }
        agent = next;
        last_ev = ev;
        if (!same_state(s, agent)) return fail(idx, "solver step: agent state mismatch");
        if (s.events != pack_replay_events(ev)) return fail(idx, "solver step: event mismatch");
        if (ev.terminal() && i + 1 < log.steps.size()) {
            return fail(idx, "steps recorded after a terminal event");
        }
    }

    if (!collided && log.success != last_ev.reached_goal) {
        return fail(static_cast<long long>(log.steps.size()) - 1,
                    "stored success flag disagrees with the re-simulated outcome");
    }
    return res;
}

}  // namespace tracksmith
