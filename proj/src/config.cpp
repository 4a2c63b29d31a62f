#include "tracksmith/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "config_json.hpp"

namespace tracksmith {

using nlohmann::json;
using cfgjson::Fields;
using cfgjson::phys_from_json;
using cfgjson::phys_to_json;
using cfgjson::track_from_json;
using cfgjson::track_to_json;

std::string game_to_string(GameKind game) {
    return game == GameKind::platform ? "platform" : "racing";
}

GameKind game_from_string(const std::string& s) {
    if (s == "platform") return GameKind::platform;
    if (s == "racing") return GameKind::racing;
    throw ConfigError("unknown game '" + s + "' (expected platform|racing)");
}

std::string source_to_string(TrackSourceKind k) {
    switch (k) {
        case TrackSourceKind::generator: return "generator";
        case TrackSourceKind::rule_pcg: return "rule_pcg";
        case TrackSourceKind::fixed_set: return "fixed_set";
    }
    return "generator";
}

TrackSourceKind source_from_string(const std::string& s) {
    if (s == "generator") return TrackSourceKind::generator;
    if (s == "rule_pcg") return TrackSourceKind::rule_pcg;
    if (s == "fixed_set") return TrackSourceKind::fixed_set;
    throw ConfigError("unknown solver_source '" + s + "' (expected generator|rule_pcg|fixed_set)");
}

namespace {

json reward_to_json(const RewardConfig& c) {
    return json{{"alpha", c.alpha},
                {"beta", c.beta},
                {"fail_magnitude", c.fail_magnitude},
                {"step_penalty_neg_aux", c.step_penalty_neg_aux},
                {"progress_scale", c.progress_scale},
                {"completion_bonus", c.completion_bonus},
                {"solver_fail_penalty", c.solver_fail_penalty},
                {"airtime_bonus", c.airtime_bonus},
                {"collision_penalty", c.collision_penalty}};
}

void reward_from_json(const json& j, RewardConfig& c, const std::string& ctx) {
    Fields f(j, ctx);
    f.get("alpha", c.alpha);
    f.get("beta", c.beta);
    f.get("fail_magnitude", c.fail_magnitude);
    f.get("step_penalty_neg_aux", c.step_penalty_neg_aux);
    f.get("progress_scale", c.progress_scale);
    f.get("completion_bonus", c.completion_bonus);
    f.get("solver_fail_penalty", c.solver_fail_penalty);
    f.get("airtime_bonus", c.airtime_bonus);
    f.get("collision_penalty", c.collision_penalty);
    f.finish();
    if (c.alpha.size() != c.beta.size()) throw ConfigError(ctx + ": alpha/beta length mismatch");
}

json hyper_to_json(const PpoHyper& h) {
    return json{{"learning_rate", h.learning_rate},
                {"gamma", h.gamma},
                {"gae_lambda", h.gae_lambda},
                {"clip_epsilon", h.clip_epsilon},
                {"epochs", h.epochs},
                {"minibatch_size", h.minibatch_size},
                {"entropy_coef", h.entropy_coef},
                {"value_coef", h.value_coef}};
}

void hyper_from_json(const json& j, PpoHyper& h, const std::string& ctx) {
    Fields f(j, ctx);
    f.get("learning_rate", h.learning_rate);
    f.get("gamma", h.gamma);
    f.get("gae_lambda", h.gae_lambda);
    f.get("clip_epsilon", h.clip_epsilon);
    f.get("epochs", h.epochs);
    f.get("minibatch_size", h.minibatch_size);
    f.get("entropy_coef", h.entropy_coef);
    f.get("value_coef", h.value_coef);
    f.finish();
    if (h.gamma <= 0.0 || h.gamma > 1.0 || h.gae_lambda <= 0.0 || h.gae_lambda > 1.0 ||
        h.clip_epsilon <= 0.0) {
        throw ConfigError(ctx + ": gamma, gae_lambda must be in (0,1], clip_epsilon > 0");
    }
}

json env_to_json(const EnvConfig& e) {
    return json{{"game", game_to_string(e.game)},
                {"track", track_to_json(e.track)},
                {"physics", phys_to_json(e.phys)},
                {"reward", reward_to_json(e.reward)},
                {"max_segments", e.max_segments},
                {"goal_dist_min", e.goal_dist_min},
                {"goal_dist_max", e.goal_dist_max},
                {"goal_height_min", e.goal_height_min},
                {"goal_height_max", e.goal_height_max},
                {"waypoints_min", e.waypoints_min},
                {"waypoints_max", e.waypoints_max},
                {"waypoint_gap_min", e.waypoint_gap_min},
                {"waypoint_gap_max", e.waypoint_gap_max},
                {"waypoint_turn_max_deg", e.waypoint_turn_max_deg}};
}

void env_from_json(const json& j, EnvConfig& e, const std::string& ctx) {
    Fields f(j, ctx);
    if (f.has("game")) e.game = game_from_string(f.at("game").get<std::string>());
    if (f.has("track")) track_from_json(f.at("track"), e.track, ctx + ".track");
    if (f.has("physics")) phys_from_json(f.at("physics"), e.phys, ctx + ".physics");
    if (f.has("reward")) reward_from_json(f.at("reward"), e.reward, ctx + ".reward");
    f.get("max_segments", e.max_segments);
    f.get("goal_dist_min", e.goal_dist_min);
    f.get("goal_dist_max", e.goal_dist_max);
    f.get("goal_height_min", e.goal_height_min);
    f.get("goal_height_max", e.goal_height_max);
    f.get("waypoints_min", e.waypoints_min);
    f.get("waypoints_max", e.waypoints_max);
    f.get("waypoint_gap_min", e.waypoint_gap_min);
    f.get("waypoint_gap_max", e.waypoint_gap_max);
    f.get("waypoint_turn_max_deg", e.waypoint_turn_max_deg);
    f.finish();
}

json schedule_to_json(const PhaseSchedule& s) {
    return json{{"solver_phase_steps", s.solver_phase_steps},
                {"generator_phase_steps", s.generator_phase_steps},
                {"total_steps", s.total_steps}};
}

void schedule_from_json(const json& j, PhaseSchedule& s, const std::string& ctx) {
    Fields f(j, ctx);
    f.get("solver_phase_steps", s.solver_phase_steps);
    f.get("generator_phase_steps", s.generator_phase_steps);
    f.get("total_steps", s.total_steps);
    f.finish();
    if (s.solver_phase_steps < 0 || s.generator_phase_steps < 0 || s.total_steps < 0) {
        throw ConfigError(ctx + ": steps must be non-negative");
    }
}

}  // namespace

TrainerConfig default_trainer_config(GameKind game) {
    TrainerConfig c;
    c.env.game = game;
    c.gen_hyper.learning_rate = 2e-4;
    c.solver_hyper.learning_rate = 3e-4;
    c.gen_hyper.gamma = 0.99;
    c.solver_hyper.gamma = game == GameKind::racing ? 0.998 : 0.99;
    return c;
}

std::string experiment_config_to_json(const TrainerConfig& c) {
    json j{{"env", env_to_json(c.env)},
           {"hidden", c.hidden},
           {"n_aux", c.n_aux},
           {"gen_hyper", hyper_to_json(c.gen_hyper)},
           {"solver_hyper", hyper_to_json(c.solver_hyper)},
           {"schedule", schedule_to_json(c.schedule)},
           {"rollout_steps", c.rollout_steps},
           {"aux_multiset", c.aux_multiset},
           {"train_generator", c.train_generator},
           {"train_solver", c.train_solver},
           {"solver_source", source_to_string(c.solver_source)},
           {"fixed_set_size", c.fixed_set_size},
           {"rule_segments", c.rule_segments},
           {"rule_max_abs_angle_deg", c.rule_max_abs_angle_deg},
           {"fine_tune_solver_steps", c.fine_tune_solver_steps},
           {"seed", c.seed},
           {"checkpoint_every_steps", c.checkpoint_every_steps},
           {"eval_every_steps", c.eval_every_steps},
           {"eval_episodes", c.eval_episodes},
           {"output_dir", c.output_dir},
           {"threads", c.threads}};
    if (c.fixed_aux) j["fixed_aux"] = *c.fixed_aux;
    return j.dump(2);
}

TrainerConfig parse_experiment_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    // Resolve game first so game-dependent defaults apply before overrides.
    GameKind game = GameKind::platform;
    if (j.contains("env") && j["env"].is_object() && j["env"].contains("game")) {
        game = game_from_string(j["env"]["game"].get<std::string>());
    }
    TrainerConfig c = default_trainer_config(game);

    Fields f(j, "config");
    if (f.has("env")) env_from_json(f.at("env"), c.env, "config.env");
    f.get("hidden", c.hidden);
    f.get("n_aux", c.n_aux);
    if (f.has("gen_hyper")) hyper_from_json(f.at("gen_hyper"), c.gen_hyper, "config.gen_hyper");
    if (f.has("solver_hyper")) {
        hyper_from_json(f.at("solver_hyper"), c.solver_hyper, "config.solver_hyper");
    }
    if (f.has("schedule")) schedule_from_json(f.at("schedule"), c.schedule, "config.schedule");
    f.get("rollout_steps", c.rollout_steps);
    f.get("aux_multiset", c.aux_multiset);
    if (f.has("fixed_aux")) {
        const json& fa = f.at("fixed_aux");
        if (!fa.is_null()) c.fixed_aux = fa.get<double>();
    }
    f.get("train_generator", c.train_generator);
    f.get("train_solver", c.train_solver);
    if (f.has("solver_source")) {
        c.solver_source = source_from_string(f.at("solver_source").get<std::string>());
    }
    f.get("fixed_set_size", c.fixed_set_size);
    f.get("rule_segments", c.rule_segments);
    f.get("rule_max_abs_angle_deg", c.rule_max_abs_angle_deg);
    f.get("fine_tune_solver_steps", c.fine_tune_solver_steps);
    f.get("seed", c.seed);
    f.get("checkpoint_every_steps", c.checkpoint_every_steps);
    f.get("eval_every_steps", c.eval_every_steps);
    f.get("eval_episodes", c.eval_episodes);
    f.get("output_dir", c.output_dir);
    f.get("threads", c.threads);
    f.finish();

    if (c.n_aux < 1) throw ConfigError("config.n_aux must be >= 1");
    if (c.hidden.empty()) throw ConfigError("config.hidden must have at least one layer");
    if (c.aux_multiset.empty()) throw ConfigError("config.aux_multiset must be non-empty");
    for (double a : c.aux_multiset) {
        if (a < -1.0 || a > 1.0) throw ConfigError("config.aux_multiset values must be in [-1,1]");
    }
    if (c.fixed_aux && (*c.fixed_aux < -1.0 || *c.fixed_aux > 1.0)) {
        throw ConfigError("config.fixed_aux must be in [-1,1]");
    }
    if (static_cast<int>(c.env.reward.alpha.size()) != c.n_aux) {
        // Weight lists default to ones of the right length.
        if (c.env.reward.alpha.size() == 1 && c.env.reward.beta.size() == 1) {
            c.env.reward.alpha.assign(static_cast<std::size_t>(c.n_aux), c.env.reward.alpha[0]);
            c.env.reward.beta.assign(static_cast<std::size_t>(c.n_aux), c.env.reward.beta[0]);
        } else {
            throw ConfigError("config.env.reward.alpha/beta length must equal n_aux");
        }
    }
    if (c.rollout_steps <= 0) throw ConfigError("config.rollout_steps must be positive");
    if (c.threads < 1) throw ConfigError("config.threads must be >= 1");
    return c;
}

TrainerConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

void save_experiment_config(const TrainerConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << experiment_config_to_json(cfg) << "\n";
}

}  // namespace tracksmith
