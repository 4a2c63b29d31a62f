#include "tracksmith/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tracksmith {

TrackState generate_rule_pcg(Rng& rng, GameKind game, const TrackConfig& cfg, int segments,
                             double max_abs_angle_deg) {
    if (game == GameKind::platform) {
        TrackState t = make_platform_track(cfg);
        for (int i = 0; i < segments; ++i) {
            PlatformSegmentSpec s;
            s.distance = rng.uniform(5.0, 10.0);
            s.angle = rng.uniform(-max_abs_angle_deg, max_abs_angle_deg);
            s.size = rng.uniform(4.0, 6.0);
            s.height_delta = rng.uniform(-2.0, 2.0);
            append_platform_segment(t, s, platform_bearing(t, 0.0));
        }
        t.goal = t.blocks.back().center;
        return t;
    }
    TrackState t = make_race_track(cfg);
    for (int i = 0; i < segments && !t.terminated_by_collision; ++i) {
        RaceSegmentSpec s;
        s.length = rng.uniform(20.0, 30.0);
        s.curve = rng.uniform(-30.0, 30.0);
        s.height_delta = rng.uniform(-5.0, 5.0);
        extend_race_track(t, s, cfg);
    }
    // A rule track that loops into itself is re-rolled from the same stream.
    if (t.terminated_by_collision) return generate_rule_pcg(rng, game, cfg, segments, max_abs_angle_deg);
    t.goal = t.arcs.back().end.position;
    return t;
}

namespace {

struct EpOut {
    bool success = false;
    int steps = 0;
    double dist = 0.0;
    double speed = 0.0;
    int track_id = 0;
    // per-track geometry sums
    double d_sum = 0, size_sum = 0, ang_sum = 0, len_sum = 0, curve_sum = 0, h_sum = 0;
    int pseg = 0, rseg = 0;
};

void geom_sums(const TrackState& t, EpOut& o) {
    for (const PlatformSegmentSpec& s : t.platform_specs) {
        o.d_sum += s.distance;
        o.size_sum += s.size;
        o.ang_sum += std::abs(s.angle);
        o.h_sum += std::abs(s.height_delta);
        ++o.pseg;
    }
    for (const RaceSegmentSpec& s : t.race_specs) {
        o.len_sum += s.length;
        o.curve_sum += std::abs(s.curve);
        o.h_sum += std::abs(s.height_delta);
        ++o.rseg;
    }
}

}  // namespace

EvalReport evaluate_solver(const MlpPolicy& solver, const TrackSource& source, int episodes,
                           const EnvConfig& env, int threads) {
    std::vector<TrackState> fixed;
    if (source.kind == TrackSource::Kind::fixed_set) {
        Rng trng = Rng::stream(source.seed, 0xF15EDULL);
        for (int i = 0; i < source.count; ++i) {
            fixed.push_back(generate_rule_pcg(trng, env.game, env.track, source.rule_segments,
                                              source.rule_max_abs_angle_deg));
        }
    }

    std::vector<EpOut> outs(static_cast<std::size_t>(episodes));
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(std::max(1, threads))
#else
    (void)threads;
#endif
    for (int i = 0; i < episodes; ++i) {
        Rng rng = Rng::stream(source.seed, static_cast<std::uint64_t>(i));
        EpisodeParams p;
        p.mode = EpisodeMode::eval;
        p.solver = &solver;
        p.keep_track = true;
        TrackState local;
        if (source.kind == TrackSource::Kind::generator) {
            p.generator = source.generator;
            p.aux = AuxVector({source.aux});
            p.goals = randomize_goal(rng, env.game, env);
        } else {
            if (source.kind == TrackSource::Kind::rule_pcg) {
                local = generate_rule_pcg(rng, env.game, env.track, source.rule_segments,
                                          source.rule_max_abs_angle_deg);
            } else {
                local = fixed[static_cast<std::size_t>(i) % fixed.size()];
            }
            p.static_track = &local;
            p.goals = {static_track_goal(local)};
        }
        EpisodeResult ep = run_episode(p, env, rng);
        EpOut& o = outs[static_cast<std::size_t>(i)];
        o.success = ep.success;
        o.steps = ep.steps;
        o.dist = ep.distance_completed;
        o.speed = ep.steps > 0 ? ep.distance_completed / (ep.steps * env.phys.dt) : 0.0;
        o.track_id = source.kind == TrackSource::Kind::fixed_set
                         ? i % std::max(1, source.count)
                         : i;
        geom_sums(ep.final_track, o);
    }

    EvalReport r;
    r.aux = source.aux;
    r.episodes = episodes;
    if (episodes == 0) return r;
    double s_sum = 0;
    std::map<int, bool> track_done;
    double d_sum = 0, size_sum = 0, ang_sum = 0, len_sum = 0, curve_sum = 0, h_sum = 0;
    long long pseg = 0, rseg = 0;
    for (const EpOut& o : outs) {
        s_sum += o.success ? 1.0 : 0.0;
        bool& td = track_done[o.track_id];
        td = td || o.success;
        r.avg_steps += o.steps;
        r.avg_distance += o.dist;
        r.avg_speed += o.speed;
        d_sum += o.d_sum;
        size_sum += o.size_sum;
        ang_sum += o.ang_sum;
        len_sum += o.len_sum;
        curve_sum += o.curve_sum;
        h_sum += o.h_sum;
        pseg += o.pseg;
        rseg += o.rseg;
    }
    double n = episodes;
    r.success_mean = s_sum / n;
    r.success_std = std::sqrt(std::max(0.0, r.success_mean * (1.0 - r.success_mean)));
    int any = 0;
    for (const auto& [id, done] : track_done) any += done ? 1 : 0;
    r.completed_by_any = static_cast<double>(any) / static_cast<double>(track_done.size());
    r.avg_steps /= n;
    r.avg_distance /= n;
    r.avg_speed /= n;
    if (pseg > 0) {
        r.avg_block_distance = d_sum / pseg;
        r.avg_block_size = size_sum / pseg;
        r.avg_abs_angle = ang_sum / pseg;
        r.avg_abs_height = h_sum / pseg;
    }
    if (rseg > 0) {
        r.avg_seg_length = len_sum / rseg;
        r.avg_abs_curve = curve_sum / rseg;
        r.avg_abs_height = h_sum / rseg;
    }
    return r;
}

std::vector<EvalReport> sweep_aux(const MlpPolicy& generator, const MlpPolicy& solver,
                                  const std::vector<double>& aux_values, int trials,
                                  const EnvConfig& env, std::uint64_t seed, int threads) {
    std::vector<EvalReport> out;
    for (double a : aux_values) {
        TrackSource src;
        src.kind = TrackSource::Kind::generator;
        src.generator = &generator;
        src.aux = a;
        src.seed = seed;
        EvalReport r = evaluate_solver(solver, src, trials, env, threads);
        r.aux = a;
        out.push_back(r);
    }
    return out;
}

std::vector<std::vector<EvalReport>> cross_solver_matrix(
    const std::vector<const MlpPolicy*>& solvers, const MlpPolicy& generator,
    const std::vector<double>& aux_values, int trials, const EnvConfig& env, std::uint64_t seed,
    int threads) {
    std::vector<std::vector<EvalReport>> matrix;
    for (double a : aux_values) {
        std::vector<EvalReport> row;
        for (const MlpPolicy* s : solvers) {
            TrackSource src;
            src.kind = TrackSource::Kind::generator;
            src.generator = &generator;
            src.aux = a;
            src.seed = seed;
            row.push_back(evaluate_solver(*s, src, trials, env, threads));
        }
        matrix.push_back(std::move(row));
    }
    return matrix;
}

std::string eval_report_csv_header() {
    return "label,aux,episodes,success_mean,success_std,completed_by_any,avg_steps,avg_distance,"
           "avg_speed,avg_block_distance,avg_block_size,avg_abs_angle,avg_seg_length,"
           "avg_abs_curve,avg_abs_height";
}

std::string eval_report_csv_row(const EvalReport& r, const std::string& label) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "%s,%.3f,%d,%.6f,%.6f,%.6f,%.2f,%.3f,%.3f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f",
                  label.c_str(), r.aux, r.episodes, r.success_mean, r.success_std,
                  r.completed_by_any, r.avg_steps, r.avg_distance, r.avg_speed,
                  r.avg_block_distance, r.avg_block_size, r.avg_abs_angle, r.avg_seg_length,
                  r.avg_abs_curve, r.avg_abs_height);
    return std::string(buf);
}

}  // namespace tracksmith
