#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tracksmith/observation.hpp"
#include "tracksmith/ppo.hpp"
#include "tracksmith/reward.hpp"

namespace tracksmith {

// Environment-level configuration shared by training and evaluation.
struct EnvConfig {
    GameKind game = GameKind::platform;
    TrackConfig track;
    PhysicsConfig phys;
    RewardConfig reward;
    int max_segments = 60;  // generator emissions per episode

    // Goal randomization. Platform: one goal at a random bearing. Racing: a
    // chain of waypoints, each a bounded bearing change from the last leg.
    double goal_dist_min = 30.0, goal_dist_max = 80.0;
    double goal_height_min = -10.0, goal_height_max = 20.0;
    int waypoints_min = 1, waypoints_max = 4;
    double waypoint_gap_min = 100.0, waypoint_gap_max = 300.0;
    double waypoint_turn_max_deg = 90.0;
};

std::vector<Vec3> randomize_goal(Rng& rng, GameKind game, const EnvConfig& cfg);

// Goal for a pre-built (rule or fixed) track: its far end.
Vec3 static_track_goal(const TrackState& track);

PolicySpec generator_policy_spec(GameKind game, int n_aux, const TrackConfig& cfg,
                                 const std::vector<int>& hidden);
PolicySpec solver_policy_spec(GameKind game, const TrackConfig& cfg, const std::vector<int>& hidden);

struct StepRecord {
    std::vector<double> obs;
    ActionSample act;
    double reward = 0.0;
    double value = 0.0;
    bool done = false;
};

// Optional per-step capture for the replay verifier. `events` packs the step
// outcome (solver lines) or the collision flag (generator lines) so the
// verifier can cross-check outcomes, not just kinematics.
struct ReplayStep {
    bool generator = false;
    std::vector<double> action_env;
    Vec3 position;
    double heading_deg = 0.0;
    double speed = 0.0;
    double vertical_velocity = 0.0;
    bool airborne = false;
    int events = 0;
};

constexpr int kReplayFell = 1;
constexpr int kReplayOffTrack = 2;
constexpr int kReplayReachedGoal = 4;
constexpr int kReplayTimedOut = 8;
constexpr int kReplayAirtime = 16;
constexpr int kReplayCollision = 32;

int pack_replay_events(const StepEvents& ev);

struct ReplayLog {
    GameKind game = GameKind::platform;
    std::vector<double> aux;
    std::vector<Vec3> goals;
    TrackState initial_track;
    std::vector<ReplayStep> steps;
    bool success = false;
    TrackConfig track_cfg;
    PhysicsConfig phys_cfg;
};

struct EpisodeResult {
    std::vector<StepRecord> solver_traj;
    std::vector<StepRecord> generator_traj;
    bool success = false;
    bool collision = false;
    int steps = 0;                    // solver physics steps
    double distance_completed = 0.0;  // platform: progress to goal; racing: road meters
    double aux_used = 0.0;
    TrackState final_track;
    AgentState final_agent;
};

enum class EpisodeMode { train_solver, train_generator, eval };

struct EpisodeParams {
    EpisodeMode mode = EpisodeMode::eval;
    const MlpPolicy* generator = nullptr;  // null requires static_track
    const MlpPolicy* solver = nullptr;
    const TrackState* static_track = nullptr;
    AuxVector aux;
    std::vector<Vec3> goals;
    bool keep_track = false;
    ReplayLog* replay = nullptr;
};

EpisodeResult run_episode(const EpisodeParams& params, const EnvConfig& env, Rng& rng);

// Appends one recorded trajectory to a batch, computing per-episode GAE with
// a zero bootstrap (episodes always run to a terminal event).
void append_episode(RolloutBatch& batch, const std::vector<StepRecord>& traj, double gamma,
                    double lambda);

double sample_aux_value(Rng& rng, const std::vector<double>& multiset);

enum class TrackSourceKind { generator, rule_pcg, fixed_set };

struct PhaseSchedule {
    long long solver_phase_steps = 200000;
    long long generator_phase_steps = 20000;
    long long total_steps = 2000000;
};

struct TrainerConfig {
    EnvConfig env;
    std::vector<int> hidden{64, 64};
    int n_aux = 1;
    PpoHyper gen_hyper;
    PpoHyper solver_hyper;
    PhaseSchedule schedule;
    long long rollout_steps = 4096;
    std::vector<double> aux_multiset{-1.0, -1.0, -0.5, 0.5, 1.0, 1.0};
    std::optional<double> fixed_aux;  // ablation: constant aux
    bool train_generator = true;
    bool train_solver = true;
    TrackSourceKind solver_source = TrackSourceKind::generator;
    int fixed_set_size = 5;
    int rule_segments = 20;
    double rule_max_abs_angle_deg = 45.0;
    long long fine_tune_solver_steps = 0;
    std::uint64_t seed = 1;
    long long checkpoint_every_steps = 0;  // 0: only at the end
    long long eval_every_steps = 0;        // 0: off
    int eval_episodes = 32;
    std::string output_dir;  // empty: no metrics/checkpoint files
    int threads = 1;
};

enum class TrainStatus { ok, halted_nan };

// Alternating-phase trainer. One policy updates per phase while the other
// runs frozen inference. All state needed to resume bit-exactly lives here
// and round-trips through the checkpoint module.
class Trainer {
public:
    explicit Trainer(const TrainerConfig& cfg);

    TrainerConfig cfg;
    MlpPolicy generator;
    MlpPolicy solver;
    Adam gen_opt, solver_opt;
    Rng env_rng, update_rng;
    long long env_steps = 0;
    long long episodes_run = 0;
    long long phase_index = 0;
    long long in_phase_steps = 0;
    long long last_checkpoint_steps = 0;
    long long last_eval_steps = 0;
    TrainStatus status = TrainStatus::ok;

    // Runs the remaining schedule (resume-aware). Returns final status.
    TrainStatus run();

    // Pre-built solver-phase tracks for the fixed_set source.
    const std::vector<TrackState>& fixed_tracks() const { return fixed_tracks_; }

private:
    std::vector<TrackState> fixed_tracks_;

    struct PhaseKind {
        bool generator_phase = false;
        long long length = 0;
    };
    std::vector<PhaseKind> phase_cycle() const;

    bool run_phase(bool generator_phase, long long remaining);
    EpisodeResult roll_one(bool generator_phase, RolloutBatch* batch);
    void write_metrics_row(const std::string& role, const TrainStats& ts, int episodes,
                           double success, double solver_rew, double gen_rew, double aux_mean);
    void maybe_periodic_checkpoint();
    void maybe_eval();
};

}  // namespace tracksmith
