#include <cmath>

#include "doctest.h"

#include "cgqg/coarsegrain.hpp"
#include "cgqg/spectral.hpp"
#include "test_support.hpp"

using namespace cgqg;
using test::random_band_limited;
using test::random_field;
using test::rel_rms_diff;

namespace {
const GridPtr gf = make_grid(64, 64, 1.0e6, 1.0e6);
const GridPtr gc = make_grid(16, 16, 1.0e6, 1.0e6);
}  // namespace

TEST_CASE("coarsen spec validates divisibility and Nyquist ordering") {
    CHECK_NOTHROW(coarsegrain::CoarsenSpec(gf, gc));
    CHECK_THROWS(coarsegrain::CoarsenSpec(gc, gf));  // coarse above fine
    const auto g24 = make_grid(24, 24, 1.0e6, 1.0e6);
    CHECK_THROWS(coarsegrain::CoarsenSpec(gf, g24));  // 24 does not divide 64
    const auto g_other = make_grid(16, 16, 2.0e6, 1.0e6);
    CHECK_THROWS(coarsegrain::CoarsenSpec(gf, g_other));  // different domain
}

TEST_CASE("constant fields pass through unchanged") {
    coarsegrain::CoarsenSpec spec(gf, gc);
    LayeredField f(2, 64, 64);
    for (double& v : f.v) v = -2.5;
    const auto c = coarsegrain::coarsen(f, spec);
    CHECK(c.nx == 16);
    for (double v : c.v) CHECK(v == doctest::Approx(-2.5).epsilon(1e-13));
}

TEST_CASE("band-limited unattenuated modes are preserved") {
    coarsegrain::CoarsenSpec spec(gf, gc);
    // keep support below the coarse ssd cutoff (0.65 * coarse kmax)
    const auto fc = random_band_limited(gc, 3, 0.6);
    // lift to the fine grid by spectral embedding: inverse of truncation
    const auto chat = spectral::forward(fc, gc);
    SpectralField fhat(gf, 2);
    const double scale = (64.0 * 64.0) / (16.0 * 16.0);
    for (int l = 0; l < 2; ++l)
        for (int j = 0; j < 16; ++j) {
            if (j == 8) continue;
            const int jf = j < 8 ? j : j + (64 - 16);
            for (int i = 0; i < 8; ++i)
                fhat.at(l, jf, i) = chat.at(l, j, i) * scale;
        }
    const auto fine = spectral::inverse(fhat);
    const auto back = coarsegrain::coarsen(fine, spec);
    CHECK(rel_rms_diff(back, fc) < 1e-12);
}

TEST_CASE("white noise has zero power above the coarse band after coarsening") {
    coarsegrain::CoarsenSpec spec(gf, gc);
    const auto fine = random_field(gf, 17);
    const auto c = coarsegrain::coarsen(fine, spec);
    const auto chat = spectral::forward(c, gc);
    // Nyquist row/column were dropped entirely
    for (int l = 0; l < 2; ++l) {
        for (int i = 0; i < gc->nkx(); ++i) CHECK(std::abs(chat.at(l, 8, i)) < 1e-10);
        for (int j = 0; j < 16; ++j) CHECK(std::abs(chat.at(l, j, 8)) < 1e-10);
    }
    // and the retained coefficients match the fine ones times the filter
    const auto fhat = spectral::forward(fine, gf);
    const double scale = (16.0 * 16.0) / (64.0 * 64.0);
    for (int j : {0, 3, 7, 9, 15}) {
        const int jf = j < 8 ? j : j + 48;
        for (int i : {0, 3, 7}) {
            const double mult = gc->ssd[j * gc->nkx() + i];
            const auto expect = fhat.at(0, jf, i) * scale * mult;
            CHECK(std::abs(chat.at(0, j, i) - expect) < 1e-12 * (1.0 + std::abs(expect)));
        }
    }
}

TEST_CASE("coarsen is linear") {
    coarsegrain::CoarsenSpec spec(gf, gc);
    const auto f = random_field(gf, 21);
    const auto g = random_field(gf, 22);
    LayeredField combo(2, 64, 64);
    for (std::size_t i = 0; i < combo.v.size(); ++i) combo.v[i] = 2.0 * f.v[i] - 0.5 * g.v[i];
    const auto cf = coarsegrain::coarsen(f, spec);
    const auto cg = coarsegrain::coarsen(g, spec);
    const auto cc = coarsegrain::coarsen(combo, spec);
    LayeredField expect(2, 16, 16);
    for (std::size_t i = 0; i < expect.v.size(); ++i)
        expect.v[i] = 2.0 * cf.v[i] - 0.5 * cg.v[i];
    CHECK(rel_rms_diff(cc, expect) < 1e-12);
}

TEST_CASE("stride computation and misalignment errors") {
    CHECK(coarsegrain::stride_for(900.0, 7200.0) == 8);  // 15 min -> 2 h
    CHECK(coarsegrain::stride_for(600.0, 600.0) == 1);
    CHECK_THROWS_AS(coarsegrain::stride_for(700.0, 7200.0), ConfigError);
}

TEST_CASE("training series counts floor(duration / coarse dt)") {
    qg::QgParams p = qg::QgParams::jet(64, 64, 600.0);
    coarsegrain::CoarsenSpec spec(gf, gc);
    const auto q0 = random_band_limited(gf, 31, 0.2, 1e-6);

    qg::Stepper st(p, q0);
    const auto series = coarsegrain::make_training_series(st, spec, 5, 10);
    REQUIRE(series.size() == 2);  // 10 fine steps, stride 5
    CHECK(series[0].nx == 16);
    CHECK(series[0].time == doctest::Approx(5 * 600.0));
    CHECK(series[1].time == doctest::Approx(10 * 600.0));

    qg::Stepper st2(p, q0);
    const auto empty = coarsegrain::make_training_series(st2, spec, 5, 0);
    CHECK(empty.empty());
}
