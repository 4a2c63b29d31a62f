#pragma once

#include <stdexcept>
#include <string>

#include "tracksmith/selfplay.hpp"

namespace tracksmith {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string game_to_string(GameKind game);
GameKind game_from_string(const std::string& s);

std::string source_to_string(TrackSourceKind k);
TrackSourceKind source_from_string(const std::string& s);

// Defaults resolve per game before the file is applied: generator lr 2e-4,
// solver lr 3e-4, solver gamma 0.998 for racing, 0.99 otherwise.
TrainerConfig default_trainer_config(GameKind game);

// Experiment config file: JSON mirroring TrainerConfig. Every key optional,
// unknown keys rejected with the offending path in the message.
TrainerConfig load_experiment_config(const std::string& path);
TrainerConfig parse_experiment_config(const std::string& json_text);
std::string experiment_config_to_json(const TrainerConfig& cfg);
void save_experiment_config(const TrainerConfig& cfg, const std::string& path);

}  // namespace tracksmith
