#include "tracksmith/reward.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>

namespace tracksmith {

double aux_external_scale(const AuxVector& aux, const RewardConfig& cfg) {
    if (aux.values.size() != cfg.beta.size()) {
        throw std::invalid_argument("aux/beta length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < aux.values.size(); ++i) s += aux.values[i] * cfg.beta[i];
    return s;
}

double eq1_reward(const GeneratorRewardInputs& inputs, const AuxVector& aux, const RewardConfig& cfg) {
    if (aux.values.size() != cfg.alpha.size() || aux.values.size() != cfg.beta.size()) {
        throw std::invalid_argument("aux/weight length mismatch");
    }
    double r = 0.0;
    for (std::size_t i = 0; i < aux.values.size(); ++i) {
        r += inputs.r_int * aux.values[i] * cfg.alpha[i];
    }
    return r + inputs.r_ext * aux_external_scale(aux, cfg);
}

double generator_step_reward(const StepEvents& events, const AuxVector& aux, const RewardConfig& cfg,
                             GameKind game) {
    double scale = aux_external_scale(aux, cfg);
    double r = 0.0;
    if (events.failure()) r += -scale * cfg.fail_magnitude;
    if (scale < 0.0) r -= cfg.step_penalty_neg_aux;
    r += cfg.progress_scale * std::max(events.progress_delta, 0.0);
    if (game == GameKind::racing && scale < 0.0 && events.airtime_step) r += cfg.airtime_bonus;
    return r;
}

double generator_collision_reward(const RewardConfig& cfg) { return -cfg.collision_penalty; }

double solver_step_reward(const StepEvents& events, const RewardConfig& cfg) {
    double r = cfg.progress_scale * events.progress_delta;
    if (events.reached_goal) r += cfg.completion_bonus;
    if (events.failure()) r -= cfg.solver_fail_penalty;
    return r;
}

}  // namespace tracksmith
