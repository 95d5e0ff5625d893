#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "cgqg/calibrate.hpp"
#include "cgqg/closure.hpp"
#include "cgqg/qg.hpp"

namespace cgqg::config {

// Minimal TOML-style reader: [section] headers, key = value lines, # comments.
// Values are booleans, numbers, quoted strings or flat arrays of numbers.
class Toml {
  public:
    using Value = std::variant<bool, double, std::string, std::vector<double>>;

    static Toml parse_file(const std::filesystem::path& path);
    static Toml parse_string(const std::string& text);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    double number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    long integer(const std::string& key) const;
    long integer_or(const std::string& key, long fallback) const;
    bool boolean_or(const std::string& key, bool fallback) const;
    std::string str(const std::string& key) const;
    std::string str_or(const std::string& key, const std::string& fallback) const;
    std::vector<double> array(const std::string& key) const;
    std::vector<double> array_or(const std::string& key, std::vector<double> fallback) const;

    // canonical "key = value" dump of all resolved entries, sorted by key
    std::string canonical() const;

  private:
    std::map<std::string, Value> kv_;
};

// Full experiment description; every run is determined by this plus nothing
// else, and its hash is stamped into all output artifacts.
struct ExperimentConfig {
    qg::QgParams fine;
    qg::QgParams coarse;

    double spinup_days = 360.0;
    double duration_days = 365.0;
    uint64_t dataset_seed = 1;

    closure::ClosureFamily family;
    calibrate::TrainConfig train;
    uint64_t train_seed = 2;

    int eval_horizon_steps = 360;  // 30 days of 2 h steps
    int eval_ensemble = 20;
    double longrun_days = 7300.0;
    uint64_t eval_seed = 3;

    uint64_t hash = 0;

    static ExperimentConfig defaults();
    static ExperimentConfig from_file(const std::filesystem::path& path);
    static ExperimentConfig from_toml(const Toml& t);
    std::string canonical() const;
    void finalize();  // recompute hash from the canonical form
};

}  // namespace cgqg::config
