#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>

#include "cgqg/scoring.hpp"

namespace cgqg::calibrate {

struct ObjectiveValue {
    double loss = 0.0;
    int n_windows = 0;
    int n_unstable = 0;
};

// Objective seen by the optimizer. `key` drives all stochasticity of one
// evaluation (minibatch choice, rollout noise); the optimizer passes the same
// key to every candidate within an iteration so comparisons share noise.
using Objective = std::function<ObjectiveValue(std::span<const double> theta, uint64_t key)>;

struct EsConfig {
    int population = 24;  // even; antithetic pairs
    int iters = 100;
    double sigma0 = 0.05;
    double sigma_decay = 0.995;
    double sigma_min = 1e-4;
    double lr0 = 0.15;
    double lr_decay = 0.997;
    double lr_min = 1e-3;

    void validate() const;
};

struct IterRecord {
    int iter = 0;
    double mean_loss = 0.0;  // loss of the current mean theta on the fixed eval key
    double best_cand_loss = 0.0;
    double sigma = 0.0, lr = 0.0;
    int unstable = 0;
    uint64_t theta_hash = 0;
    double wall_ms = 0.0;
};

struct TrainRecord {
    std::vector<IterRecord> iters;
    void append_csv(const std::filesystem::path& path, uint64_t config_hash, int phase,
                    int w) const;
};

struct EsResult {
    std::vector<double> best_theta;  // mean theta with the lowest tracked loss
    double best_loss = 0.0;
    std::vector<double> final_theta;
    TrainRecord record;
    bool ever_finite = false;  // saw at least one evaluation with a stable window
};

// Antithetic evolution-strategies minimization with rank-shaped updates and
// geometric step-size decay. Deterministic given the seed; candidate
// evaluations may run concurrently. eval_objective, when given, is the
// (typically larger-batch) objective used to track the best-seen mean theta;
// it is called with a key that is fixed across iterations so the tracked
// losses are comparable.
EsResult es_optimize(const Objective& objective, std::vector<double> theta0,
                     const EsConfig& cfg, uint64_t seed,
                     const Objective* eval_objective = nullptr);

struct TrainPhase {
    int w = 1;
    int iters = 100;
};

struct TrainConfig {
    std::vector<TrainPhase> curriculum;  // window lengths nondecreasing
    int S = 4;
    int batch = 3;  // windows per objective evaluation
    EsConfig es;
    double instability_penalty = 1e3;

    void validate() const;
};

struct TrainResult {
    closure::ClosureParams params;
    std::vector<double> phase_final_loss;
    TrainRecord record;  // concatenated over phases
};

// Window-length curriculum training of a closure against the online loss.
// Each phase warm-starts from the previous one; checkpoints (closure blob +
// record CSV) go to checkpoint_dir when given. With resume=true, completed
// phase checkpoints are loaded instead of recomputed.
TrainResult train_closure(std::span<const LayeredField> series,
                          const closure::ClosureFamily& family, const TrainConfig& cfg,
                          const qg::QgParams& coarse, uint64_t seed,
                          const std::filesystem::path* checkpoint_dir = nullptr,
                          bool resume = false, uint64_t config_hash = 0);

// Uniform sample of `count` distinct values from [0, n) keyed by `key`.
std::vector<int> sample_without_replacement(int n, int count, uint64_t key);

}  // namespace cgqg::calibrate
