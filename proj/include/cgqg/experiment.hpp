#pragma once

#include <filesystem>

#include "cgqg/config.hpp"
#include "cgqg/diagnostics.hpp"
#include "cgqg/io.hpp"
#include "cgqg/theorylab.hpp"

namespace cgqg::experiment {

// Fine spin-up + production run, coarse snapshots at the coarse dt, manifest
// with counts and hashes.
io::DatasetManifest generate_dataset(const config::ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir);

struct TrainOutput {
    closure::ClosureParams params;
    std::filesystem::path checkpoint;
    std::vector<double> phase_final_loss;
};

TrainOutput train_from_dataset(const config::ExperimentConfig& cfg,
                               const std::filesystem::path& dataset_dir,
                               const std::filesystem::path& out_dir, bool resume = false);

struct EvaluateOutput {
    double delta_e_closure = 0.0;   // NaN when the closed run went unstable
    double delta_e_baseline = 0.0;  // coarse model without closure
    bool closure_survived = false;
    bool baseline_survived = false;
    diagnostics::ScoreCurve curve_closure;
    diagnostics::ScoreCurve curve_baseline;
};

// Emits score-curve and spectrum CSVs, Delta E values and a long-run
// stability report under out_dir. The validation dataset must come from a
// different seed than the checkpoint's training dataset.
EvaluateOutput evaluate_checkpoint(const config::ExperimentConfig& cfg,
                                   const std::filesystem::path& checkpoint,
                                   const std::filesystem::path& val_dataset_dir,
                                   const std::filesystem::path& out_dir);

struct TheoryCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Theory-lab suites with the acceptance tolerances baked in; ids: scoring,
// prop1, prop2, si-prop1.
std::vector<TheoryCheck> run_theory_suite(const std::string& suite, uint64_t seed);

// Metadata sidecar written next to a training checkpoint (dataset provenance).
struct CheckpointMeta {
    uint64_t train_dataset_seed = 0;
    uint64_t train_data_hash = 0;
    uint64_t config_hash = 0;
};

void write_checkpoint_meta(const std::filesystem::path& dir, const CheckpointMeta& m);
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& dir);

}  // namespace cgqg::experiment
