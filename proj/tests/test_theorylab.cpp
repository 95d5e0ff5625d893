#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "cgqg/theorylab.hpp"

using namespace cgqg;
using namespace cgqg::theorylab;

TEST_CASE("ar1 conditional law closed forms") {
    const Ar1System sys{0.9, 1.0, NoiseShape::Gaussian};
    // m = 1, x0 = 1 -> (a, sigma^2)
    auto [m1, v1] = ar1_conditional_law(sys, 1.0, 1);
    CHECK(m1 == doctest::Approx(0.9));
    CHECK(v1 == doctest::Approx(1.0));
    // long-lead limit: mean -> 0, variance -> sigma^2/(1-a^2) = 5.2632
    auto [mInf, vInf] = ar1_conditional_law(sys, 3.0, 2000);
    CHECK(std::abs(mInf) < 1e-10);
    CHECK(vInf == doctest::Approx(1.0 / (1.0 - 0.81)).epsilon(1e-10));
    CHECK(sys.invariant_var() == doctest::Approx(5.263157894736842).epsilon(1e-12));
}

TEST_CASE("ar1 simulation matches the invariant law moments") {
    const Ar1System sys{0.9, 1.0, NoiseShape::Gaussian};
    const auto xs = sys.simulate(0.0, 200000, 3);
    double mean = 0.0, var = 0.0;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= double(xs.size());
    CHECK(std::abs(mean) < 0.1);
    CHECK(var == doctest::Approx(sys.invariant_var()).epsilon(0.05));
}

TEST_CASE("window mse objective: exact decomposition properties") {
    const Ar1System sys{0.9, 1.0, NoiseShape::Gaussian};
    // model = truth: zero bias, objective = sum of model + target variances
    const Ar1Model truth{0.9, 1.0};
    const int w = 7;
    double expect = 0.0;
    for (int m = 1; m <= w; ++m) {
        const double v = (1.0 - std::pow(0.9, 2 * m)) / (1.0 - 0.81);
        expect += 2.0 * v;
    }
    CHECK(window_mse_objective(truth, sys, w) == doctest::Approx(expect).epsilon(1e-12));

    // theta2 strictly increases the objective for fixed theta1
    const double base = window_mse_objective({0.8, 0.0}, sys, w);
    const double up = window_mse_objective({0.8, 0.5}, sys, w);
    const double up2 = window_mse_objective({0.8, 1.0}, sys, w);
    CHECK(up > base);
    CHECK(up2 > up);

    // global minimizer over a grid is (a, 0)
    double best = 1e300;
    double bt1 = 0, bt2 = 0;
    for (double t1 = -0.99; t1 <= 0.991; t1 += 0.01)
        for (double t2 = 0.0; t2 <= 3.0; t2 += 0.1) {
            const double v = window_mse_objective({t1, t2}, sys, w);
            if (v < best) {
                best = v;
                bt1 = t1;
                bt2 = t2;
            }
        }
    CHECK(bt1 == doctest::Approx(0.9).epsilon(0.011));
    CHECK(bt2 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("window score objective prefers the true law") {
    const Ar1System sys{0.9, 1.0, NoiseShape::Gaussian};
    const int w = 10, mc = 40000;
    const double at_truth = window_score_objective({0.9, 1.0}, sys, w, mc, 5);
    const double det = window_score_objective({0.9, 0.0}, sys, w, mc, 5);
    const double off = window_score_objective({0.7, 1.0}, sys, w, mc, 5);
    CHECK(at_truth < det);  // deterministic submanifold strictly worse
    CHECK(at_truth < off);
}

TEST_CASE("climatological risk minimizers: mean for squared, median for euclidean") {
    // symmetric gaussian case: both minimizers at 0
    const Ar1System sym{0.5, 1.0, NoiseShape::Gaussian};
    const double c_sq = risk_minimizer(LossId::Squared, sym, 200000, 1, -3, 3);
    const double c_eu = risk_minimizer(LossId::Euclidean, sym, 200000, 1, -3, 3);
    const double inv_std = std::sqrt(sym.invariant_var());
    CHECK(std::abs(c_sq) < 0.02 * inv_std);
    CHECK(std::abs(c_eu) < 0.02 * inv_std);

    // risk at the minimizer is below the risk on a candidate grid
    const double rmin = climatological_risk(LossId::Euclidean, c_eu, sym, 200000, 1);
    for (double c = -2.0; c <= 2.0; c += 0.25)
        CHECK(rmin <= climatological_risk(LossId::Euclidean, c, sym, 200000, 1) + 1e-9);

    // skewed mixture: median differs from mean; euclidean minimizer tracks it
    const Ar1System skew{0.5, 1.0, NoiseShape::SkewedMixture};
    const auto xs = skew.simulate(0.0, 2000000, 9);
    std::vector<double> sorted = xs;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double median = sorted[sorted.size() / 2];
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= double(xs.size());
    const double c_skew = risk_minimizer(LossId::Euclidean, skew, 1000000, 2, -4, 4);
    const double sd = std::sqrt(skew.invariant_var());
    CHECK(std::abs(median - mean) > 0.08 * sd);  // the testbed is genuinely skewed
    CHECK(std::abs(c_skew - median) < 0.02 * sd);
}

TEST_CASE("divergence estimator identities") {
    const auto P = gaussian_sampler(0.0, 1.0);
    const auto Q = gaussian_sampler(1.0, 1.0);
    const auto self = divergence_estimator(P, gaussian_sampler(0.0, 1.0), 60000, 4, 11);
    CHECK(std::abs(self.value) <= 3.0 * self.stderr_);

    const auto sep = divergence_estimator(P, Q, 60000, 4, 12);
    const double closed = gaussian_energy_divergence(0.0, 1.0, 1.0, 1.0);
    CHECK(closed == doctest::Approx(0.27).epsilon(0.05));
    CHECK(sep.value > 5.0 * sep.stderr_);
    CHECK(std::abs(sep.value - closed) <= 3.0 * sep.stderr_);
    CHECK(sep.value >= -3.0 * sep.stderr_);
}

TEST_CASE("1-D sorted-sample W2") {
    // identical samples -> 0
    std::vector<double> a{3.0, -1.0, 2.0}, b{2.0, 3.0, -1.0};
    CHECK(wasserstein2_sorted(a, b) == doctest::Approx(0.0));
    // a constant shift moves W2 by exactly the shift
    std::vector<double> c{3.5, -0.5, 2.5};
    CHECK(wasserstein2_sorted(a, c) == doctest::Approx(0.5));
    // point mass at 0 vs N(0, s^2): W2 = s (sampled)
    rng::CounterStream s(13, rng::Stream::MonteCarlo);
    std::vector<double> zeros(50000, 0.0), gauss(50000);
    for (std::size_t i = 0; i < gauss.size(); ++i) gauss[i] = 2.294 * s.gaussian(i);
    CHECK(wasserstein2_sorted(zeros, gauss) == doctest::Approx(2.294).epsilon(0.02));
}

TEST_CASE("ar1 window loss: score route matches the estimator on a tiny case") {
    // single window, w=1, members determined by the noise stream; verify the
    // loss equals a by-hand energy score of those members
    const Ar1Model m{0.5, 1.0};
    std::vector<double> series{2.0, 1.0};
    const int windows[] = {0};
    const uint64_t seed = 33;
    const double loss = ar1_window_loss(m, series, 1, 3, LossId::Score, windows, seed);

    rng::CounterStream noise(mix64(seed, 0), rng::Stream::ClosureNoise);
    std::vector<double> members(3);
    for (int s = 0; s < 3; ++s) members[s] = 0.5 * 2.0 + noise.gaussian(s);
    const double y = 1.0;
    const double expect = scoring::energy_score(members, 3, 1, std::span(&y, 1));
    CHECK(loss == doctest::Approx(expect).epsilon(1e-14));
}
