#include "tracksmith/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tracksmith {

void RolloutBatch::clear() {
    obs.clear();
    act_u.clear();
    act_bin.clear();
    old_log_prob.clear();
    advantages.clear();
    returns.clear();
}

void MinibatchStats::merge(const MinibatchStats& o) {
    policy_loss_sum += o.policy_loss_sum;
    value_loss_sum += o.value_loss_sum;
    entropy_sum += o.entropy_sum;
    kl_sum += o.kl_sum;
    clip_count += o.clip_count;
    samples += o.samples;
}

namespace {

constexpr int kChunk = 32;  // fixed reduction granularity, see header

// One sample's loss and head-gradient contribution, scaled by inv_count so
// the result is the gradient of the minibatch mean.
void process_sample(const MlpPolicy& policy, const RolloutBatch& batch, int row,
                    const PpoHyper& hyper, double inv_count, ForwardCache& cache,
                    std::vector<double>* grad, MinibatchStats& stats) {
    const PolicySpec& spec = policy.spec();
    const double* obs = batch.obs.data() + static_cast<std::size_t>(row) * spec.obs_dim;
    policy.forward_cached(obs, cache);
    const HeadOut& out = cache.out;

    std::vector<double> u(batch.act_u.begin() + static_cast<std::size_t>(row) * spec.n_continuous,
                          batch.act_u.begin() + static_cast<std::size_t>(row + 1) * spec.n_continuous);
    std::vector<double> bin(batch.act_bin.begin() + static_cast<std::size_t>(row) * spec.n_binary,
                            batch.act_bin.begin() + static_cast<std::size_t>(row + 1) * spec.n_binary);

    double lp_new = action_log_prob(out, spec, u, bin);
    double adv = batch.advantages[row];
    double ratio = std::exp(lp_new - batch.old_log_prob[row]);
    double clipped_ratio = std::clamp(ratio, 1.0 - hyper.clip_epsilon, 1.0 + hyper.clip_epsilon);
    double unclipped = ratio * adv;
    double clipped = clipped_ratio * adv;
    double objective;
    double dlp;  // d(loss)/d(lp_new)
    if (unclipped <= clipped) {
        objective = unclipped;
        dlp = -ratio * adv * inv_count;
    } else {
        objective = clipped;
        dlp = 0.0;  // clip saturated, no gradient through the ratio
    }

    double verr = out.value - batch.returns[row];
    double ent = entropy(out, spec);

    stats.policy_loss_sum += -objective;
    stats.value_loss_sum += verr * verr;
    stats.entropy_sum += ent;
    stats.kl_sum += (ratio - 1.0) - std::log(ratio);
    stats.clip_count += std::abs(ratio - 1.0) > hyper.clip_epsilon ? 1 : 0;
    stats.samples += 1;

    if (grad) {
        HeadGrad g;
        g.d_mean.assign(spec.n_continuous, 0.0);
        g.d_log_std.assign(spec.n_continuous, 0.0);
        g.d_logit.assign(spec.n_binary, 0.0);
        if (dlp != 0.0) action_log_prob_grad(out, spec, u, bin, dlp, g);
        g.d_value = hyper.value_coef * 2.0 * verr * inv_count;
        entropy_grad(out, spec, -hyper.entropy_coef * inv_count, g);
        policy.backward(cache, g, *grad);
    }
}

void process_chunk(const MlpPolicy& policy, const RolloutBatch& batch, const int* idx, int begin,
                   int end, const PpoHyper& hyper, double inv_count, std::vector<double>* grad,
                   MinibatchStats& stats) {
    ForwardCache cache;
    for (int k = begin; k < end; ++k) {
        process_sample(policy, batch, idx[k], hyper, inv_count, cache, grad, stats);
    }
}

}  // namespace

void accumulate_grad_serial(const MlpPolicy& policy, const RolloutBatch& batch, const int* idx,
                            int count, const PpoHyper& hyper, std::vector<double>& grad,
                            MinibatchStats& stats) {
    double inv_count = count > 0 ? 1.0 / count : 0.0;
    int n_chunks = (count + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> chunk_grads(n_chunks);
    std::vector<MinibatchStats> chunk_stats(n_chunks);
    for (int c = 0; c < n_chunks; ++c) {
        chunk_grads[c].assign(grad.size(), 0.0);
        process_chunk(policy, batch, idx, c * kChunk, std::min(count, (c + 1) * kChunk), hyper,
                      inv_count, &chunk_grads[c], chunk_stats[c]);
    }
    for (int c = 0; c < n_chunks; ++c) {
        const std::vector<double>& cg = chunk_grads[c];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cg[i];
        stats.merge(chunk_stats[c]);
    }
}

void accumulate_grad_parallel(const MlpPolicy& policy, const RolloutBatch& batch, const int* idx,
                              int count, const PpoHyper& hyper, int n_threads,
                              std::vector<double>& grad, MinibatchStats& stats) {
    double inv_count = count > 0 ? 1.0 / count : 0.0;
    int n_chunks = (count + kChunk - 1) / kChunk;
    std::vector<std::vector<double>> chunk_grads(n_chunks);
    std::vector<MinibatchStats> chunk_stats(n_chunks);
    for (int c = 0; c < n_chunks; ++c) chunk_grads[c].assign(grad.size(), 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(1, n_threads))
#endif
    for (int c = 0; c < n_chunks; ++c) {
        process_chunk(policy, batch, idx, c * kChunk, std::min(count, (c + 1) * kChunk), hyper,
                      inv_count, &chunk_grads[c], chunk_stats[c]);
    }
#ifndef _OPENMP
    (void)n_threads;
#endif

    // Ordered reduction keeps the sum identical to the serial version.
    for (int c = 0; c < n_chunks; ++c) {
        const std::vector<double>& cg = chunk_grads[c];
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cg[i];
        stats.merge(chunk_stats[c]);
    }
}

double ppo_loss_only(const MlpPolicy& policy, const RolloutBatch& batch, const int* idx, int count,
                     const PpoHyper& hyper) {
    double inv_count = count > 0 ? 1.0 / count : 0.0;
    int n_chunks = (count + kChunk - 1) / kChunk;
    double loss = 0.0;
    for (int c = 0; c < n_chunks; ++c) {
        MinibatchStats st;
        process_chunk(policy, batch, idx, c * kChunk, std::min(count, (c + 1) * kChunk), hyper,
                      inv_count, nullptr, st);
        loss += (st.policy_loss_sum + hyper.value_coef * st.value_loss_sum -
                 hyper.entropy_coef * st.entropy_sum) * inv_count;
    }
    return loss;
}

void normalize_advantages(RolloutBatch& batch) {
    int n = batch.size();
    if (n == 0) return;
    double mean = std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    double sd = std::sqrt(var / n);
    double inv = sd > 1e-8 ? 1.0 / sd : 1.0;
    for (double& a : batch.advantages) a = (a - mean) * inv;
}

TrainStats ppo_update(MlpPolicy& policy, Adam& opt, RolloutBatch& batch, const PpoHyper& hyper,
                      Rng& rng, int n_threads) {
    TrainStats ts;
    int n = batch.size();
    if (n == 0) return ts;

    // A NaN advantage would not reach the gradient (the clip min() eats it)
    // but it does poison the normalization below, silently zeroing the policy
    // gradient for the whole batch. Reject bad inputs the same way bad
    // gradients are rejected.
    auto all_finite = [](const std::vector<double>& v) {
        for (double x : v) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    };
    if (!all_finite(batch.obs) || !all_finite(batch.act_u) || !all_finite(batch.act_bin) ||
        !all_finite(batch.old_log_prob) || !all_finite(batch.advantages) ||
        !all_finite(batch.returns)) {
        ts.nan_abort = true;
        return ts;
    }
    normalize_advantages(batch);

    std::vector<int> perm(n);
    std::vector<double> grad(policy.param_count());
    double grad_norm_sum = 0.0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i) {
            int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
            std::swap(perm[i], perm[j]);
        }
        for (int start = 0; start < n; start += hyper.minibatch_size) {
            int count = std::min(hyper.minibatch_size, n - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            MinibatchStats st;
            if (n_threads > 1) {
                accumulate_grad_parallel(policy, batch, perm.data() + start, count, hyper,
                                         n_threads, grad, st);
            } else {
                accumulate_grad_serial(policy, batch, perm.data() + start, count, hyper, grad, st);
            }

            double norm2 = 0.0;
            bool finite = true;
            for (double gv : grad) {
                if (!std::isfinite(gv)) {
                    finite = false;
                    break;
                }
                norm2 += gv * gv;
            }
            if (!finite) {
                ts.nan_abort = true;
                return ts;
            }
            opt.lr = hyper.learning_rate;
            opt.step(policy.params(), grad);

            double inv = st.samples > 0 ? 1.0 / st.samples : 0.0;
            ts.policy_loss += st.policy_loss_sum * inv;
            ts.value_loss += st.value_loss_sum * inv;
            ts.entropy += st.entropy_sum * inv;
            ts.approx_kl += st.kl_sum * inv;
            ts.clip_fraction += st.clip_count * inv;
            grad_norm_sum += std::sqrt(norm2);
            ts.minibatches += 1;
        }
    }
    if (ts.minibatches > 0) {
        double inv = 1.0 / ts.minibatches;
        ts.policy_loss *= inv;
        ts.value_loss *= inv;
        ts.entropy *= inv;
        ts.approx_kl *= inv;
        ts.clip_fraction *= inv;
        ts.grad_norm = grad_norm_sum * inv;
    }
    return ts;
}

}  // namespace tracksmith
