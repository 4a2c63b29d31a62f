#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "tracksmith/selfplay.hpp"

namespace tracksmith {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Standalone policy file (spec + flat params), format "tracksmith-policy" v1.
void save_policy(const MlpPolicy& policy, const std::string& path);
MlpPolicy load_policy(const std::string& path);

// Full trainer checkpoint, format "tracksmith-checkpoint" v1: config, both
// policies, optimizer moments, RNG states, and schedule counters. Loading
// then running continues bit-exactly where the saved run left off.
void save_trainer(const Trainer& trainer, const std::string& path);
std::unique_ptr<Trainer> load_trainer(const std::string& path);
TrainerConfig peek_trainer_config(const std::string& path);

// Loads a policy from either file format; role selects "solver" or
// "generator" when given a trainer checkpoint.
MlpPolicy load_policy_any(const std::string& path, const std::string& role);

// FNV-1a 64 over the file bytes, hex string. Used by determinism checks.
std::string file_hash_hex(const std::string& path);

}  // namespace tracksmith
