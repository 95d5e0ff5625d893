#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "cgqg/calibrate.hpp"
#include "cgqg/io.hpp"
#include "cgqg/theorylab.hpp"

using namespace cgqg;

namespace {

calibrate::Objective bowl(std::vector<double> target) {
    return [target](std::span<const double> theta, uint64_t) {
        double acc = 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double d = theta[i] - target[i];
            acc += d * d;
        }
        return calibrate::ObjectiveValue{acc, 0, 0};
    };
}

}  // namespace

TEST_CASE("config validation") {
    calibrate::EsConfig es;
    es.population = 7;  // odd
    CHECK_THROWS(es.validate());
    calibrate::TrainConfig tc;
    tc.curriculum = {{4, 10}, {2, 10}};  // decreasing window
    CHECK_THROWS(tc.validate());
}

TEST_CASE("es converges on the quadratic bowl within budget") {
    calibrate::EsConfig cfg;
    cfg.population = 16;
    cfg.iters = 250;  // 250 * (16 + 1) evaluations, well under 5000
    cfg.sigma0 = 0.3;
    cfg.sigma_decay = 0.99;
    cfg.sigma_min = 1e-4;
    cfg.lr0 = 0.6;
    cfg.lr_decay = 0.995;
    cfg.lr_min = 1e-2;
    const auto res = calibrate::es_optimize(bowl({1.0, -2.0}), {0.0, 0.0}, cfg, 42);
    CHECK(std::abs(res.best_theta[0] - 1.0) < 1e-2);
    CHECK(std::abs(res.best_theta[1] + 2.0) < 1e-2);
    CHECK(res.best_loss < 1e-3);
}

TEST_CASE("zero step size leaves theta unchanged") {
    calibrate::EsConfig cfg;
    cfg.population = 8;
    cfg.iters = 20;
    cfg.lr0 = 0.0;
    cfg.lr_min = 0.0;
    const auto res = calibrate::es_optimize(bowl({1.0, 1.0}), {0.3, -0.4}, cfg, 1);
    CHECK(res.final_theta[0] == 0.3);
    CHECK(res.final_theta[1] == -0.4);
}

TEST_CASE("same seed gives identical records, different seeds differ") {
    calibrate::EsConfig cfg;
    cfg.population = 8;
    cfg.iters = 30;
    const auto a = calibrate::es_optimize(bowl({0.5, 0.5}), {0.0, 0.0}, cfg, 7);
    const auto b = calibrate::es_optimize(bowl({0.5, 0.5}), {0.0, 0.0}, cfg, 7);
    REQUIRE(a.record.iters.size() == b.record.iters.size());
    for (std::size_t i = 0; i < a.record.iters.size(); ++i) {
        CHECK(a.record.iters[i].mean_loss == b.record.iters[i].mean_loss);
        CHECK(a.record.iters[i].theta_hash == b.record.iters[i].theta_hash);
    }
    const auto c = calibrate::es_optimize(bowl({0.5, 0.5}), {0.0, 0.0}, cfg, 8);
    CHECK(a.best_theta != c.best_theta);
}

TEST_CASE("non-finite objective at theta0 is a typed failure") {
    calibrate::EsConfig cfg;
    const calibrate::Objective nan_obj = [](std::span<const double>, uint64_t) {
        return calibrate::ObjectiveValue{std::nan(""), 0, 0};
    };
    CHECK_THROWS_AS(calibrate::es_optimize(nan_obj, {0.0}, cfg, 1), TrainingError);
}

TEST_CASE("batch sampler draws distinct sorted indices deterministically") {
    const auto a = calibrate::sample_without_replacement(100, 10, 5);
    const auto b = calibrate::sample_without_replacement(100, 10, 5);
    CHECK(a == b);
    CHECK(a.size() == 10);
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[i] > a[i - 1]);
    const auto c = calibrate::sample_without_replacement(5, 10, 1);
    CHECK(c.size() == 5);  // capped at the population
}

TEST_CASE("deterministic AR(1) family recovers exact linear dynamics") {
    // noiseless linear toy system x' = a x; the model family contains the
    // truth, so the online euclidean loss can reach (numerically) zero
    const theorylab::Ar1System sys{0.7, 0.0, theorylab::NoiseShape::Gaussian};
    std::vector<double> series(2001);
    series[0] = 1.0;
    for (std::size_t i = 1; i < series.size(); ++i) series[i] = sys.a * series[i - 1];

    const int w = 10;
    const int total = int((series.size() - 1) / w);
    calibrate::Objective obj = [&](std::span<const double> theta, uint64_t key) {
        theorylab::Ar1Model m{theta[0], 0.0};
        if (!m.stable()) return calibrate::ObjectiveValue{1e12, 1, 1};
        const auto batch = calibrate::sample_without_replacement(total, 16, mix64(key, 2));
        const double l = theorylab::ar1_window_loss(m, series, w, 1,
                                                    theorylab::LossId::Euclidean, batch, key);
        return calibrate::ObjectiveValue{l, int(batch.size()), 0};
    };
    calibrate::EsConfig cfg;
    cfg.population = 16;
    cfg.iters = 400;
    cfg.sigma0 = 0.1;
    cfg.sigma_decay = 0.99;
    cfg.sigma_min = 1e-6;
    cfg.lr0 = 0.5;
    cfg.lr_decay = 0.99;
    cfg.lr_min = 1e-3;
    const auto res = calibrate::es_optimize(obj, {0.0}, cfg, 3);
    CHECK(std::abs(res.best_theta[0] - 0.7) < 1e-3);
    CHECK(res.best_loss < 1e-6);
}

TEST_CASE("train_closure warm start and checkpointing on a tiny QG problem") {
    const qg::QgParams p = qg::QgParams::jet(16, 16, 3600.0);
    const GridPtr g = p.make_grid();
    // series from the bare coarse model; the zero closure is optimal, so
    // training just has to stay near zero and remain stable
    LayeredField x0(2, 16, 16);
    {
        rng::CounterStream s(19, rng::Stream::MonteCarlo);
        s.fill_gaussian(std::span<double>(x0.v.data(), x0.v.size()));
        for (double& v : x0.v) v *= 1e-7;
    }
    qg::Stepper st(p, x0);
    std::vector<LayeredField> series{st.state()};
    for (int i = 0; i < 24; ++i) {
        st.step();
        series.push_back(st.state());
    }

    calibrate::TrainConfig tc;
    tc.curriculum = {{2, 6}, {4, 6}};
    tc.S = 2;
    tc.batch = 2;
    tc.es.population = 8;
    tc.es.sigma0 = 0.001;

    const closure::ClosureFamily fam{closure::FamilyKind::LinearSpectral, true, 4};
    const auto dir = std::filesystem::temp_directory_path() / "cgqg_train_test";
    std::filesystem::remove_all(dir);
    const auto res = calibrate::train_closure(series, fam, tc, p, 77, &dir, false, 0xF00D);
    CHECK(res.params.theta.size() == 8);
    CHECK(res.phase_final_loss.size() == 2);
    CHECK(std::filesystem::exists(dir / "phase_0.closure"));
    CHECK(std::filesystem::exists(dir / "phase_1.closure"));
    CHECK(std::filesystem::exists(dir / "train_record.csv"));

    // byte-identical checkpoints across identical reruns
    const auto dir2 = std::filesystem::temp_directory_path() / "cgqg_train_test2";
    std::filesystem::remove_all(dir2);
    const auto res2 = calibrate::train_closure(series, fam, tc, p, 77, &dir2, false, 0xF00D);
    CHECK(res.params.theta == res2.params.theta);
    CHECK(io::hash_file(dir / "phase_1.closure") == io::hash_file(dir2 / "phase_1.closure"));

    // resume skips completed phases and lands on the same parameters
    const auto res3 = calibrate::train_closure(series, fam, tc, p, 77, &dir, true, 0xF00D);
    CHECK(res3.params.theta == res.params.theta);

    // series shorter than the largest window is a typed failure
    calibrate::TrainConfig huge = tc;
    huge.curriculum = {{100, 2}};
    CHECK_THROWS_AS(calibrate::train_closure(series, fam, huge, p, 1, nullptr, false, 0),
                    TrainingError);
}
