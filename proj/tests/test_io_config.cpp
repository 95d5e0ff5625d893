#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "cgqg/config.hpp"
#include "cgqg/experiment.hpp"
#include "cgqg/io.hpp"
#include "cgqg/plot.hpp"
#include "test_support.hpp"

using namespace cgqg;

namespace {
std::filesystem::path tmpdir(const char* name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}
}  // namespace

TEST_CASE("snapshot round trip is bitwise exact") {
    const auto dir = tmpdir("cgqg_io_test");
    const auto g = make_grid(16, 16, 1e6, 1e6);
    auto f = test::random_field(g, 5, 1e-6);
    f.time = 12345.5;
    io::write_snapshot(dir / "a.cgqg", f, 900.0, 0xDEADBEEFull);
    const auto s = io::read_snapshot(dir / "a.cgqg");
    CHECK(s.field.v == f.v);
    CHECK(s.field.time == f.time);
    CHECK(s.dt == 900.0);
    CHECK(s.params_hash == 0xDEADBEEFull);

    // corrupt magic is rejected
    {
        std::ofstream os(dir / "bad.cgqg", std::ios::binary);
        os << "NOPE1234567890";
    }
    CHECK_THROWS(io::read_snapshot(dir / "bad.cgqg"));
}

TEST_CASE("closure blob round trip preserves family and theta bits") {
    const auto dir = tmpdir("cgqg_io_test2");
    closure::ClosureParams p{{closure::FamilyKind::LocalStencil, true, 0},
                             std::vector<double>(202)};
    for (std::size_t i = 0; i < p.theta.size(); ++i) p.theta[i] = std::sin(double(i)) * 1e-3;
    io::write_closure(dir / "c.bin", p);
    const auto q = io::read_closure(dir / "c.bin");
    CHECK(q.family.kind == p.family.kind);
    CHECK(q.family.stochastic == p.family.stochastic);
    CHECK(q.theta == p.theta);
}

TEST_CASE("dataset directory round trip with manifest hashes") {
    const auto dir = tmpdir("cgqg_io_test3");
    const auto g = make_grid(16, 16, 1e6, 1e6);
    std::vector<LayeredField> series;
    for (int i = 0; i < 3; ++i) series.push_back(test::random_field(g, 10 + i, 1e-6));
    io::DatasetManifest m;
    m.config_hash = 0xAB;
    m.dataset_seed = 42;
    m.params_hash = 0xCD;
    m.coarse_dt = 7200.0;
    io::write_dataset(dir, series, m);
    const auto m2 = io::read_manifest(dir);
    CHECK(m2.count == 3);
    CHECK(m2.dataset_seed == 42);
    CHECK(m2.nx == 16);
    const auto back = io::read_dataset(dir);
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(back[i].v == series[i].v);
}

TEST_CASE("csv round trip and config hash header") {
    const auto dir = tmpdir("cgqg_io_test4");
    io::write_csv(dir / "t.csv", {{"x", {1.0, 2.5}}, {"y", {-1e-7, 3.25e14}}}, 0x1234);
    const auto cols = io::read_csv(dir / "t.csv");
    REQUIRE(cols.size() == 2);
    CHECK(cols[0].name == "x");
    CHECK(cols[1].values[1] == 3.25e14);
    std::ifstream is(dir / "t.csv");
    std::string first;
    std::getline(is, first);
    CHECK(first.find("config=0000000000001234") != std::string::npos);
}

TEST_CASE("toml subset parser") {
    const auto t = config::Toml::parse_string(R"(
# comment
[domain]
lx = 1.0e6   # trailing comment
name = "jet run"
flag = true
[train]
curriculum_w = [1, 4, 12]
)");
    CHECK(t.number("domain.lx") == 1.0e6);
    CHECK(t.str("domain.name") == "jet run");
    CHECK(t.boolean_or("domain.flag", false));
    CHECK(t.array("train.curriculum_w") == std::vector<double>{1.0, 4.0, 12.0});
    CHECK(t.number_or("domain.missing", 7.0) == 7.0);
    CHECK_THROWS_AS(t.number("domain.name"), ConfigError);
    CHECK_THROWS_AS(config::Toml::parse_string("key"), ConfigError);
    CHECK_THROWS_AS(config::Toml::parse_string("k = "), ConfigError);
    CHECK_THROWS_AS(config::Toml::parse_string("k = 12abc"), ConfigError);
}

TEST_CASE("experiment config: defaults, file parsing, stable hashing") {
    const auto base = config::ExperimentConfig::defaults();
    CHECK(base.fine.nx == 128);
    CHECK(base.coarse.nx == 32);
    CHECK(base.hash != 0);

    const auto t = config::Toml::parse_string(R"(
[fine]
nx = 64
ny = 64
dt = 1800
[coarse]
nx = 16
ny = 16
dt = 7200
[generate]
seed = 77
duration_days = 10
[closure]
family = "local-stencil"
stochastic = false
)");
    const auto cfg = config::ExperimentConfig::from_toml(t);
    CHECK(cfg.fine.nx == 64);
    CHECK(cfg.coarse.ny == 16);
    CHECK(cfg.dataset_seed == 77);
    CHECK(cfg.family.kind == closure::FamilyKind::LocalStencil);
    CHECK_FALSE(cfg.family.stochastic);
    CHECK(cfg.hash != base.hash);
    const auto cfg2 = config::ExperimentConfig::from_toml(t);
    CHECK(cfg2.hash == cfg.hash);
}

TEST_CASE("generate -> train -> evaluate drivers on a miniature problem") {
    config::ExperimentConfig cfg = config::ExperimentConfig::defaults();
    cfg.fine = qg::QgParams::jet(32, 32, 1800.0);
    cfg.coarse = qg::QgParams::jet(16, 16, 7200.0);
    cfg.spinup_days = 2.0;
    cfg.duration_days = 4.0;
    cfg.dataset_seed = 5;
    cfg.family = {closure::FamilyKind::LinearSpectral, true, 4};
    cfg.train.curriculum = {{1, 3}, {2, 3}};
    cfg.train.S = 2;
    cfg.train.batch = 2;
    cfg.train.es.population = 6;
    cfg.train.es.sigma0 = 0.002;
    cfg.eval_horizon_steps = 4;
    cfg.eval_ensemble = 3;
    cfg.longrun_days = 5.0;
    cfg.finalize();

    const auto root = tmpdir("cgqg_e2e");
    const auto m = experiment::generate_dataset(cfg, root / "train_data");
    CHECK(m.count == int(4.0 * 86400.0 / 7200.0));  // floor(duration/coarse dt)
    CHECK(m.nx == 16);

    // generation is reproducible: same config -> identical data hash
    const auto m_re = experiment::generate_dataset(cfg, root / "train_data_re");
    CHECK(m_re.data_hash == m.data_hash);

    auto cfg_val = cfg;
    cfg_val.dataset_seed = 6;
    cfg_val.finalize();
    const auto mv = experiment::generate_dataset(cfg_val, root / "val_data");
    CHECK(mv.data_hash != m.data_hash);

    const auto tr = experiment::train_from_dataset(cfg, root / "train_data", root / "ckpt");
    CHECK(std::filesystem::exists(tr.checkpoint));

    const auto ev = experiment::evaluate_checkpoint(cfg, tr.checkpoint, root / "val_data",
                                                    root / "eval");
    CHECK(ev.baseline_survived);
    CHECK(std::filesystem::exists(root / "eval" / "score_closure.csv"));
    CHECK(std::filesystem::exists(root / "eval" / "spectrum_truth.csv"));
    CHECK(std::filesystem::exists(root / "eval" / "report.txt"));

    // evaluating against the training dataset is a seed collision
    CHECK_THROWS_AS(
        experiment::evaluate_checkpoint(cfg, tr.checkpoint, root / "train_data", root / "e2"),
        ConfigError);

    // plot subcommand machinery renders the CSVs
    plot::plot_csv(root / "eval" / "spectrum_truth.csv", root / "spec.svg", "spectrum");
    plot::plot_csv(root / "eval" / "score_closure.csv", root / "curve.svg", "curve");
    CHECK(std::filesystem::exists(root / "spec.svg"));
    CHECK(std::filesystem::exists(root / "curve.svg"));
}

TEST_CASE("empty generation duration produces a valid empty dataset") {
    config::ExperimentConfig cfg = config::ExperimentConfig::defaults();
    cfg.fine = qg::QgParams::jet(16, 16, 1800.0);
    cfg.coarse = qg::QgParams::jet(8, 8, 7200.0);
    cfg.spinup_days = 0.0;
    cfg.duration_days = 0.0;
    cfg.finalize();
    const auto dir = tmpdir("cgqg_empty");
    const auto m = experiment::generate_dataset(cfg, dir);
    CHECK(m.count == 0);
    CHECK(io::read_dataset(dir).empty());
}
