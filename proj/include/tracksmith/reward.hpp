#pragma once

#include <vector>

#include "tracksmith/physics.hpp"
#include "tracksmith/segments.hpp"

namespace tracksmith {

// Auxiliary input vector. One entry per behavior channel; each in [-1, 1].
struct AuxVector {
    std::vector<double> values;

    explicit AuxVector(std::vector<double> v = {0.0}) : values(std::move(v)) {}
    int n() const { return static_cast<int>(values.size()); }
};

struct RewardConfig {
    std::vector<double> alpha{1.0};   // internal-term weights, one per aux
    std::vector<double> beta{1.0};    // external-term weights, one per aux
    double fail_magnitude = 10.0;     // generator fail event
    double step_penalty_neg_aux = 0.01;
    double progress_scale = 0.1;      // units per meter
    double completion_bonus = 10.0;   // solver reaches final goal
    double solver_fail_penalty = 10.0;
    double airtime_bonus = 0.05;      // racing generator, per airtime step at negative aux
    double collision_penalty = 10.0;  // racing generator self-intersection, aux-independent
};

struct GeneratorRewardInputs {
    double r_int = 0.0;
    double r_ext = 0.0;
};

// r = sum_i r_int * lambda_i * alpha_i + r_ext * sum_i lambda_i * beta_i
double eq1_reward(const GeneratorRewardInputs& inputs, const AuxVector& aux, const RewardConfig& cfg);

// Generator credit for one Solver step. Clause-based rather than raw Eq. 1:
// the progress channel ignores aux, the step penalty and airtime bonus only
// engage at negative aux, and the fail event contributes -lambda * magnitude
// so that a sabotage-mode generator profits from Solver failure.
double generator_step_reward(const StepEvents& events, const AuxVector& aux, const RewardConfig& cfg,
                             GameKind game);

// One-off penalty when a generated segment self-intersects. Not aux-scaled;
// a sabotage generator must not profit from degenerate geometry.
double generator_collision_reward(const RewardConfig& cfg);

double solver_step_reward(const StepEvents& events, const RewardConfig& cfg);

// Effective external scale sum_i lambda_i * beta_i (the "difficulty dial").
double aux_external_scale(const AuxVector& aux, const RewardConfig& cfg);

}  // namespace tracksmith
