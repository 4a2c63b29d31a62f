// Serial vs OpenMP kernel comparison: PPO minibatch gradient accumulation and
// batched evaluation episodes. Both paths must agree bit for bit at every
// thread count; timings show the speedup.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <numeric>
#include <vector>

#include "tracksmith/config.hpp"
#include "tracksmith/evalharness.hpp"
#include "tracksmith/ppo.hpp"

using namespace tracksmith;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

RolloutBatch synth_batch(const MlpPolicy& policy, int n, Rng& rng) {
    const PolicySpec& s = policy.spec();
    RolloutBatch b;
    b.obs_dim = s.obs_dim;
    b.n_continuous = s.n_continuous;
    b.n_binary = s.n_binary;
    for (int i = 0; i < n; ++i) {
        std::vector<double> obs(static_cast<std::size_t>(s.obs_dim));
        for (double& v : obs) v = rng.uniform(-1.0, 1.0);
        HeadOut out = policy.forward(obs);
        ActionSample act = sample_action(out, s, rng);
        b.obs.insert(b.obs.end(), obs.begin(), obs.end());
        b.act_u.insert(b.act_u.end(), act.u.begin(), act.u.end());
        b.act_bin.insert(b.act_bin.end(), act.bin.begin(), act.bin.end());
        // Jittered behavior log-prob keeps ratios off the clip kink.
        b.old_log_prob.push_back(act.log_prob + rng.uniform(-0.2, 0.2));
        b.advantages.push_back(rng.normal());
        b.returns.push_back(rng.normal());
    }
    normalize_advantages(b);
    return b;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool reports_equal(const EvalReport& a, const EvalReport& b) {
    return a.episodes == b.episodes && bit_equal(a.success_mean, b.success_mean) &&
           bit_equal(a.success_std, b.success_std) &&
           bit_equal(a.completed_by_any, b.completed_by_any) &&
           bit_equal(a.avg_steps, b.avg_steps) && bit_equal(a.avg_distance, b.avg_distance) &&
           bit_equal(a.avg_speed, b.avg_speed) &&
           bit_equal(a.avg_block_distance, b.avg_block_distance) &&
           bit_equal(a.avg_block_size, b.avg_block_size) &&
           bit_equal(a.avg_abs_angle, b.avg_abs_angle) &&
           bit_equal(a.avg_seg_length, b.avg_seg_length) &&
           bit_equal(a.avg_abs_curve, b.avg_abs_curve) &&
           bit_equal(a.avg_abs_height, b.avg_abs_height);
}

void bench_grad(int batch_size, int repeats) {
    PolicySpec spec;
    spec.obs_dim = 33;
    spec.hidden = {64, 64};
    spec.n_continuous = 2;
    spec.n_binary = 1;
    spec.act_lo = {-1.0, -1.0};
    spec.act_hi = {1.0, 1.0};
    MlpPolicy policy(spec);
    Rng rng(42);
    policy.init_weights(rng);
    RolloutBatch batch = synth_batch(policy, batch_size, rng);
    std::vector<int> idx(static_cast<std::size_t>(batch.size()));
    std::iota(idx.begin(), idx.end(), 0);
    PpoHyper hyper;

    std::vector<double> ref(static_cast<std::size_t>(policy.param_count()), 0.0);
    MinibatchStats ref_stats;
    double t0 = now_ms();
    for (int r = 0; r < repeats; ++r) {
        std::fill(ref.begin(), ref.end(), 0.0);
        ref_stats = MinibatchStats{};
        accumulate_grad_serial(policy, batch, idx.data(), batch.size(), hyper, ref, ref_stats);
    }
    double serial_ms = (now_ms() - t0) / repeats;
    std::printf("grad  batch=%-6d serial          %8.2f ms\n", batch_size, serial_ms);

    for (int threads : {1, 2, 4, 8}) {
        std::vector<double> g(ref.size(), 0.0);
        MinibatchStats st;
        double t1 = now_ms();
        for (int r = 0; r < repeats; ++r) {
            std::fill(g.begin(), g.end(), 0.0);
            st = MinibatchStats{};
            accumulate_grad_parallel(policy, batch, idx.data(), batch.size(), hyper, threads, g, st);
        }
        double ms = (now_ms() - t1) / repeats;
        bool same = bit_equal(ref, g) && st.samples == ref_stats.samples;
        std::printf("grad  batch=%-6d omp x%-2d         %8.2f ms  speedup %5.2fx  bit-equal %s\n",
                    batch_size, threads, ms, serial_ms / ms, same ? "yes" : "NO");
        if (!same) {
            std::fprintf(stderr, "FATAL: parallel gradient diverged from serial reference\n");
            std::exit(1);
        }
    }
}

void bench_eval(int episodes) {
    TrainerConfig cfg = default_trainer_config(GameKind::platform);
    MlpPolicy solver(solver_policy_spec(cfg.env.game, cfg.env.track, cfg.hidden));
    Rng rng(7);
    solver.init_weights(rng);

    TrackSource src;
    src.kind = TrackSource::Kind::rule_pcg;
    src.seed = 11;
    src.rule_segments = cfg.rule_segments;
    src.rule_max_abs_angle_deg = cfg.rule_max_abs_angle_deg;

    double t0 = now_ms();
    EvalReport ref = evaluate_solver(solver, src, episodes, cfg.env, 1);
    double serial_ms = now_ms() - t0;
    std::printf("eval  episodes=%-4d 1 thread        %8.2f ms\n", episodes, serial_ms);

    for (int threads : {2, 4, 8}) {
        double t1 = now_ms();
        EvalReport r = evaluate_solver(solver, src, episodes, cfg.env, threads);
        double ms = now_ms() - t1;
        bool same = reports_equal(ref, r);
        std::printf("eval  episodes=%-4d %d threads       %8.2f ms  speedup %5.2fx  bit-equal %s\n",
                    episodes, threads, ms, serial_ms / ms, same ? "yes" : "NO");
        if (!same) {
            std::fprintf(stderr, "FATAL: parallel evaluation diverged from single-thread run\n");
            std::exit(1);
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    int batch = argc > 1 ? std::atoi(argv[1]) : 4096;
    int repeats = argc > 2 ? std::atoi(argv[2]) : 5;
    int episodes = argc > 3 ? std::atoi(argv[3]) : 64;
    bench_grad(batch, repeats);
    bench_eval(episodes);
    return 0;
}
