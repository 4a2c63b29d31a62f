#include "tracksmith/checkpoint.hpp"

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tracksmith/config.hpp"

namespace tracksmith {

using nlohmann::json;

namespace {

constexpr int kVersion = 1;

json spec_to_json(const PolicySpec& s) {
    return json{{"obs_dim", s.obs_dim},   {"hidden", s.hidden}, {"n_continuous", s.n_continuous},
                {"n_binary", s.n_binary}, {"act_lo", s.act_lo}, {"act_hi", s.act_hi}};
}

PolicySpec spec_from_json(const json& j) {
    PolicySpec s;
    j.at("obs_dim").get_to(s.obs_dim);
    j.at("hidden").get_to(s.hidden);
    j.at("n_continuous").get_to(s.n_continuous);
    j.at("n_binary").get_to(s.n_binary);
    j.at("act_lo").get_to(s.act_lo);
    j.at("act_hi").get_to(s.act_hi);
    return s;
}

json policy_to_json(const MlpPolicy& p) {
    return json{{"spec", spec_to_json(p.spec())}, {"params", p.params()}};
}

MlpPolicy policy_from_json(const json& j) {
    MlpPolicy p(spec_from_json(j.at("spec")));
    std::vector<double> params;
    j.at("params").get_to(params);
    if (params.size() != p.params().size()) {
        throw CheckpointError("param count mismatch: file has " + std::to_string(params.size()) +
                              ", topology needs " + std::to_string(p.params().size()));
    }
    p.params() = std::move(params);
    return p;
}

json adam_to_json(const Adam& a) {
    return json{{"lr", a.lr},   {"beta1", a.beta1}, {"beta2", a.beta2},
                {"eps", a.eps}, {"t", a.t},         {"m", a.m},
                {"v", a.v}};
}

void adam_from_json(const json& j, Adam& a) {
    j.at("lr").get_to(a.lr);
    j.at("beta1").get_to(a.beta1);
    j.at("beta2").get_to(a.beta2);
    j.at("eps").get_to(a.eps);
    j.at("t").get_to(a.t);
    j.at("m").get_to(a.m);
    j.at("v").get_to(a.v);
}

json rng_to_json(const Rng& r) {
    std::array<std::uint64_t, 4> s = r.serialize();
    return json{s[0], s[1], s[2], s[3]};
}

Rng rng_from_json(const json& j) {
    std::array<std::uint64_t, 4> s{};
    for (int i = 0; i < 4; ++i) j.at(i).get_to(s[i]);
    Rng r;
    r.deserialize(s);
    return r;
}

json read_json_file(const std::string& path, const char* expected_format) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CheckpointError(path + ": corrupt or truncated file: " + e.what());
    }
    std::string fmt = j.value("format", "");
    if (fmt != expected_format) {
        throw CheckpointError(path + ": expected format '" + std::string(expected_format) +
                              "', found '" + fmt + "'");
    }
    int version = j.value("schema_version", -1);
    if (version != kVersion) {
        throw CheckpointError(path + ": unsupported schema_version " + std::to_string(version) +
                              " (this build reads version " + std::to_string(kVersion) + ")");
    }
    return j;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write " + path);
    out << j.dump() << "\n";
    if (!out) throw CheckpointError("write failed for " + path);
}

}  // namespace

void save_policy(const MlpPolicy& policy, const std::string& path) {
    json j = policy_to_json(policy);
    j["format"] = "tracksmith-policy";
    j["schema_version"] = kVersion;
    write_json_file(j, path);
}

MlpPolicy load_policy(const std::string& path) {
    json j = read_json_file(path, "tracksmith-policy");
    try {
        return policy_from_json(j);
    } catch (const json::exception& e) {
        throw CheckpointError(path + ": " + e.what());
    }
}

void save_trainer(const Trainer& t, const std::string& path) {
    json j;
    j["format"] = "tracksmith-checkpoint";
    j["schema_version"] = kVersion;
    j["config"] = json::parse(experiment_config_to_json(t.cfg));
    j["env_steps"] = t.env_steps;
    j["episodes_run"] = t.episodes_run;
    j["phase_index"] = t.phase_index;
    j["in_phase_steps"] = t.in_phase_steps;
    j["last_checkpoint_steps"] = t.last_checkpoint_steps;
    j["last_eval_steps"] = t.last_eval_steps;
    j["status"] = t.status == TrainStatus::ok ? "ok" : "halted_nan";
    j["generator"] = policy_to_json(t.generator);
    j["solver"] = policy_to_json(t.solver);
    j["gen_opt"] = adam_to_json(t.gen_opt);
    j["solver_opt"] = adam_to_json(t.solver_opt);
    j["env_rng"] = rng_to_json(t.env_rng);
    j["update_rng"] = rng_to_json(t.update_rng);
    write_json_file(j, path);
}

TrainerConfig peek_trainer_config(const std::string& path) {
    json j = read_json_file(path, "tracksmith-checkpoint");
    return parse_experiment_config(j.at("config").dump());
}

std::unique_ptr<Trainer> load_trainer(const std::string& path) {
    json j = read_json_file(path, "tracksmith-checkpoint");
    try {
        TrainerConfig cfg = parse_experiment_config(j.at("config").dump());
        auto t = std::make_unique<Trainer>(cfg);
        t->generator = policy_from_json(j.at("generator"));
        t->solver = policy_from_json(j.at("solver"));
        adam_from_json(j.at("gen_opt"), t->gen_opt);
        adam_from_json(j.at("solver_opt"), t->solver_opt);
        t->env_rng = rng_from_json(j.at("env_rng"));
        t->update_rng = rng_from_json(j.at("update_rng"));
        j.at("env_steps").get_to(t->env_steps);
        j.at("episodes_run").get_to(t->episodes_run);
        j.at("phase_index").get_to(t->phase_index);
        j.at("in_phase_steps").get_to(t->in_phase_steps);
        j.at("last_checkpoint_steps").get_to(t->last_checkpoint_steps);
        j.at("last_eval_steps").get_to(t->last_eval_steps);
        t->status = j.at("status").get<std::string>() == "ok" ? TrainStatus::ok
                                                              : TrainStatus::halted_nan;
        return t;
    } catch (const json::exception& e) {
        throw CheckpointError(path + ": " + e.what());
    }
}

MlpPolicy load_policy_any(const std::string& path, const std::string& role) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw CheckpointError(path + ": corrupt or truncated file: " + e.what());
    }
    std::string fmt = j.value("format", "");
    if (fmt == "tracksmith-policy") return load_policy(path);
    if (fmt == "tracksmith-checkpoint") {
        if (role != "solver" && role != "generator") {
            throw CheckpointError("role must be solver or generator for trainer checkpoints");
        }
        try {
            return policy_from_json(j.at(role));
        } catch (const json::exception& e) {
            throw CheckpointError(path + ": " + e.what());
        }
    }
    throw CheckpointError(path + ": unrecognized format '" + fmt + "'");
}

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return std::string(out);
}

}  // namespace tracksmith
