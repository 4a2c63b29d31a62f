#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tracksmith/selfplay.hpp"

namespace tracksmith {

struct TrackSource {
    enum class Kind { fixed_set, rule_pcg, generator };
    Kind kind = Kind::rule_pcg;
    std::uint64_t seed = 0;
    int count = 5;  // fixed_set size
    const MlpPolicy* generator = nullptr;
    double aux = 0.0;
    int rule_segments = 20;
    double rule_max_abs_angle_deg = 45.0;
};

struct EvalReport {
    double aux = 0.0;
    int episodes = 0;
    double success_mean = 0.0;
    double success_std = 0.0;
    double completed_by_any = 0.0;  // fraction of distinct tracks with >= 1 success
    double avg_steps = 0.0;
    double avg_distance = 0.0;  // racing: road meters; platform: progress meters
    double avg_speed = 0.0;     // racing only
    // Geometry, pooled over all segments of all evaluated tracks.
    double avg_block_distance = 0.0;
    double avg_block_size = 0.0;
    double avg_abs_angle = 0.0;
    double avg_seg_length = 0.0;
    double avg_abs_curve = 0.0;
    double avg_abs_height = 0.0;
};

// Uniform random segment specs over the generator's action ranges, except the
// platform angle which is narrowed so random tracks stay mostly traversable.
TrackState generate_rule_pcg(Rng& rng, GameKind game, const TrackConfig& cfg, int segments,
                             double max_abs_angle_deg);

// Greedy-solver evaluation over independent episodes; per-episode RNG streams
// keyed by index make the result thread-count invariant.
EvalReport evaluate_solver(const MlpPolicy& solver, const TrackSource& source, int episodes,
                           const EnvConfig& env, int threads);

std::vector<EvalReport> sweep_aux(const MlpPolicy& generator, const MlpPolicy& solver,
                                  const std::vector<double>& aux_values, int trials,
                                  const EnvConfig& env, std::uint64_t seed, int threads);

std::vector<std::vector<EvalReport>> cross_solver_matrix(
    const std::vector<const MlpPolicy*>& solvers, const MlpPolicy& generator,
    const std::vector<double>& aux_values, int trials, const EnvConfig& env, std::uint64_t seed,
    int threads);

std::string eval_report_csv_header();
std::string eval_report_csv_row(const EvalReport& r, const std::string& label);

}  // namespace tracksmith
