#pragma once

#include <vector>

#include "tracksmith/policy.hpp"

namespace tracksmith {

struct PpoHyper {
    double learning_rate = 3e-4;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double clip_epsilon = 0.2;
    int epochs = 4;
    int minibatch_size = 256;
    double entropy_coef = 0.005;
    double value_coef = 0.5;
};

// Flattened rollout: n steps of observations, pre-squash continuous actions,
// binary actions, behavior log-probs, GAE advantages and returns.
struct RolloutBatch {
    int obs_dim = 0;
    int n_continuous = 0;
    int n_binary = 0;
    std::vector<double> obs;
    std::vector<double> act_u;
    std::vector<double> act_bin;
    std::vector<double> old_log_prob;
    std::vector<double> advantages;
    std::vector<double> returns;

    int size() const { return static_cast<int>(old_log_prob.size()); }
    void clear();
};

struct MinibatchStats {
    double policy_loss_sum = 0.0;
    double value_loss_sum = 0.0;
    double entropy_sum = 0.0;
    double kl_sum = 0.0;
    int clip_count = 0;
    int samples = 0;

    void merge(const MinibatchStats& o);
};

struct TrainStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_fraction = 0.0;
    double approx_kl = 0.0;
    double grad_norm = 0.0;
    int minibatches = 0;
    bool nan_abort = false;
};

// Gradient of the mean PPO loss over the indexed samples, accumulated into
// grad (pre-zeroed by the caller, sized param_count). Samples are processed
// in fixed 32-sample chunks whose partial sums reduce in chunk order, so the
// serial and OpenMP versions are bit-identical at any thread count.
void accumulate_grad_serial(const MlpPolicy& policy, const RolloutBatch& batch, const int* idx,
                            int count, const PpoHyper& hyper, std::vector<double>& grad,
                            MinibatchStats& stats);
void accumulate_grad_parallel(const MlpPolicy& policy, const RolloutBatch& batch, const int* idx,
                              int count, const PpoHyper& hyper, int n_threads,
                              std::vector<double>& grad, MinibatchStats& stats);

// Loss value alone, same reduction; the finite-difference tests probe this.
double ppo_loss_only(const MlpPolicy& policy, const RolloutBatch& batch, const int* idx, int count,
                     const PpoHyper& hyper);

// In-place batch normalization of advantages to mean 0, std 1.
void normalize_advantages(RolloutBatch& batch);

// Full update: normalize advantages, then epochs x shuffled minibatches of
// Adam steps. Non-finite gradients abort before touching the weights.
TrainStats ppo_update(MlpPolicy& policy, Adam& opt, RolloutBatch& batch, const PpoHyper& hyper,
                      Rng& rng, int n_threads);

}  // namespace tracksmith
