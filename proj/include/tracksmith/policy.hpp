#pragma once

#include <cstdint>
#include <vector>

#include "tracksmith/rng.hpp"

namespace tracksmith {

// Action interface of a policy: n_continuous squashed-Gaussian dims mapped
// affinely into [act_lo, act_hi], plus n_binary Bernoulli dims.
struct PolicySpec {
    int obs_dim = 0;
    std::vector<int> hidden{64, 64};
    int n_continuous = 0;
    int n_binary = 0;
    std::vector<double> act_lo;
    std::vector<double> act_hi;

    bool operator==(const PolicySpec&) const = default;
};

struct HeadOut {
    std::vector<double> mean;      // pre-squash
    std::vector<double> log_std;
    std::vector<double> logit;     // binary heads
    double value = 0.0;
};

struct ActionSample {
    std::vector<double> u;    // pre-squash Gaussian draws, size n_continuous
    std::vector<double> bin;  // 0/1 per binary dim
    std::vector<double> env;  // environment-ranged action, continuous then binary
    double log_prob = 0.0;
};

// Gradients of a scalar loss with respect to the head outputs of one sample.
struct HeadGrad {
    std::vector<double> d_mean;
    std::vector<double> d_log_std;
    std::vector<double> d_logit;
    double d_value = 0.0;
};

// Activations retained by the cached forward pass for backprop.
struct ForwardCache {
    std::vector<std::vector<double>> acts;  // acts[0] = input, then tanh outputs
    HeadOut out;
};

// Fixed-topology MLP: tanh trunk shared by mean/logit/value heads, plus
// state-independent log_std parameters. All trainable state lives in one
// flat f64 vector so the optimizer, checkpoints, and finite-difference
// tests see the same thing.
class MlpPolicy {
public:
    explicit MlpPolicy(PolicySpec spec);

    const PolicySpec& spec() const { return spec_; }
    int param_count() const { return static_cast<int>(theta_.size()); }
    std::vector<double>& params() { return theta_; }
    const std::vector<double>& params() const { return theta_; }

    void init_weights(Rng& rng);

    HeadOut forward(const std::vector<double>& obs) const;
    void forward_cached(const double* obs, ForwardCache& cache) const;

    // Accumulates d(loss)/d(theta) into grad (size param_count) given head
    // gradients; grad is += so minibatch accumulation is a loop over samples.
    void backward(const ForwardCache& cache, const HeadGrad& g, std::vector<double>& grad) const;

private:
    PolicySpec spec_;
    std::vector<int> sizes_;        // trunk layer widths, input first
    std::vector<int> w_off_, b_off_;
    int mean_w_ = 0, mean_b_ = 0, logit_w_ = 0, logit_b_ = 0, value_w_ = 0, value_b_ = 0;
    int log_std_off_ = 0;
    std::vector<double> theta_;

    void layout();
};

ActionSample sample_action(const HeadOut& out, const PolicySpec& spec, Rng& rng);
ActionSample greedy_action(const HeadOut& out, const PolicySpec& spec);

// Log-density of a stored action (pre-squash u plus binary choices) under new
// head outputs. Includes the tanh Jacobian and affine-range terms so the
// value is a proper density over environment actions.
double action_log_prob(const HeadOut& out, const PolicySpec& spec, const std::vector<double>& u,
                       const std::vector<double>& bin);

// Same, with scale * d(log_prob)/d(heads) accumulated into g.
double action_log_prob_grad(const HeadOut& out, const PolicySpec& spec, const std::vector<double>& u,
                            const std::vector<double>& bin, double scale, HeadGrad& g);

// Base-distribution entropy (Gaussian pre-squash plus Bernoulli), and its
// gradient contribution (scaled by coef) into g.
double entropy(const HeadOut& out, const PolicySpec& spec);
double entropy_grad(const HeadOut& out, const PolicySpec& spec, double coef, HeadGrad& g);

// Maps pre-squash u to the environment range of continuous dim i.
double squash_to_range(double u, const PolicySpec& spec, int i);

struct Adam {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<double> m, v;

    void step(std::vector<double>& params, const std::vector<double>& grad);
};

// GAE over a concatenated rollout. dones mark episode boundaries; the value
// after the final step is bootstrap_value (use 0 when that step was terminal).
void gae(const std::vector<double>& rewards, const std::vector<double>& values,
         const std::vector<std::uint8_t>& dones, double bootstrap_value, double gamma,
         double lambda, std::vector<double>* advantages, std::vector<double>* returns);

}  // namespace tracksmith
