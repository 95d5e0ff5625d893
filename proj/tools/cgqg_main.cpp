// cgqg: experiment runner for the coarse-grained QG closure laboratory.
// Subcommands: generate, train, evaluate, theory, plot.
// Exit codes: 0 success, 2 usage/config error, 3 instability, 4 check failure.

#include <cstdio>
#include <exception>
#include <iostream>

#include "CLI11.hpp"

#include "cgqg/experiment.hpp"
#include "cgqg/plot.hpp"

using namespace cgqg;

namespace {

config::ExperimentConfig load_config(const std::string& path, uint64_t* seed_override,
                                     const std::string& which) {
    config::ExperimentConfig cfg =
        path.empty() ? config::ExperimentConfig::defaults()
                     : config::ExperimentConfig::from_file(path);
    if (seed_override) {
        if (which == "generate") cfg.dataset_seed = *seed_override;
        if (which == "train") cfg.train_seed = *seed_override;
        if (which == "evaluate") cfg.eval_seed = *seed_override;
        cfg.finalize();
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coarse-grained QG closure calibration laboratory"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_dir = "out", checkpoint, suite = "scoring";
    std::string plot_input, plot_kind = "spectrum";
    uint64_t seed = 0;
    bool have_seed = false, resume = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file (TOML)");
        cmd->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
            have_seed = true;
        });
        cmd->add_option("--out", out_dir, "output directory");
    };

    auto* gen = app.add_subcommand("generate", "fine run + coarse-grained dataset");
    add_common(gen);

    auto* train = app.add_subcommand("train", "calibrate a closure on a dataset");
    add_common(train);
    train->add_option("--data", data_dir, "training dataset directory")->required();
    train->add_flag("--resume", resume, "resume from phase checkpoints");

    auto* eval = app.add_subcommand("evaluate", "score curves, spectra, Delta E, stability");
    add_common(eval);
    eval->add_option("--data", data_dir, "validation dataset directory")->required();
    eval->add_option("--checkpoint", checkpoint, "closure checkpoint file")->required();

    auto* theory = app.add_subcommand("theory", "theory-lab validation suites");
    add_common(theory);
    theory->add_option("--suite", suite, "prop1 | prop2 | si-prop1 | scoring")->required();

    auto* plotc = app.add_subcommand("plot", "render a CSV to SVG");
    plotc->add_option("--input", plot_input, "input CSV")->required();
    plotc->add_option("--out", out_dir, "output SVG path");
    plotc->add_option("--kind", plot_kind, "spectrum | curve");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            const auto cfg = load_config(config_path, have_seed ? &seed : nullptr, "generate");
            const auto m = experiment::generate_dataset(cfg, out_dir);
            std::printf("dataset: %d snapshots in %s (seed %llu, data %s)\n", m.count,
                        out_dir.c_str(), (unsigned long long)m.dataset_seed,
                        hex64(m.data_hash).c_str());
        } else if (train->parsed()) {
            const auto cfg = load_config(config_path, have_seed ? &seed : nullptr, "train");
            const auto r = experiment::train_from_dataset(cfg, data_dir, out_dir, resume);
            std::printf("trained %s -> %s\n", cfg.family.name().c_str(),
                        r.checkpoint.string().c_str());
            for (std::size_t k = 0; k < r.phase_final_loss.size(); ++k)
                std::printf("  phase %zu loss %.6g\n", k, r.phase_final_loss[k]);
        } else if (eval->parsed()) {
            const auto cfg = load_config(config_path, have_seed ? &seed : nullptr, "evaluate");
            const auto r = experiment::evaluate_checkpoint(cfg, checkpoint, data_dir, out_dir);
            std::printf("delta_e closure=%.6g baseline=%.6g (closure %s)\n", r.delta_e_closure,
                        r.delta_e_baseline, r.closure_survived ? "survived" : "UNSTABLE");
        } else if (theory->parsed()) {
            const uint64_t s = have_seed ? seed : 20260810ull;
            const auto checks = experiment::run_theory_suite(suite, s);
            bool all = true;
            std::filesystem::create_directories(out_dir);
            std::ofstream rep(std::filesystem::path(out_dir) / ("theory_" + suite + ".txt"));
            for (const auto& c : checks) {
                std::printf("[%s] %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                            c.detail.c_str());
                rep << (c.pass ? "PASS " : "FAIL ") << c.name << " | " << c.detail << "\n";
                all = all && c.pass;
            }
            if (!all) return 4;
        } else if (plotc->parsed()) {
            std::filesystem::path out = out_dir;
            if (out == "out") out = std::filesystem::path(plot_input).replace_extension(".svg");
            plot::plot_csv(plot_input, out, plot_kind);
            std::printf("wrote %s\n", out.string().c_str());
        }
    } catch (const InstabilityError& e) {
        std::fprintf(stderr, "instability: %s\n", e.what());
        return 3;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const TrainingError& e) {
        std::fprintf(stderr, "training failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
