#include <array>
#include <cmath>
#include <complex>

#include "doctest.h"

#include "cgqg/qg.hpp"
#include "cgqg/spectral.hpp"
#include "test_support.hpp"

using namespace cgqg;
using test::random_band_limited;
using test::rel_rms_diff;

namespace {

using cplx = std::complex<double>;
using Mat2 = std::array<std::array<cplx, 2>, 2>;
using Vec2 = std::array<cplx, 2>;

// closed-form exp(A t) v for a 2x2 complex matrix with distinct eigenvalues
// (spectral projectors); oracle for the linear Rossby-wave dispersion test
Vec2 expm_apply(const Mat2& A, const Vec2& v, double t) {
    const cplx tr = A[0][0] + A[1][1];
    const cplx det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
    const cplx disc = std::sqrt(tr * tr - 4.0 * det);
    const cplx l1 = 0.5 * (tr + disc), l2 = 0.5 * (tr - disc);
    REQUIRE(std::abs(l1 - l2) > 1e-18);
    auto apply_shifted = [&](const cplx& shift, const Vec2& x) {
        return Vec2{A[0][0] * x[0] + A[0][1] * x[1] - shift * x[0],
                    A[1][0] * x[0] + A[1][1] * x[1] - shift * x[1]};
    };
    const Vec2 p1 = apply_shifted(l2, v);
    const Vec2 p2 = apply_shifted(l1, v);
    const cplx e1 = std::exp(l1 * t) / (l1 - l2);
    const cplx e2 = std::exp(l2 * t) / (l2 - l1);
    return {e1 * p1[0] + e2 * p2[0], e1 * p1[1] + e2 * p2[1]};
}

qg::QgParams tiny_params() { return qg::QgParams::jet(32, 32, 600.0); }

}  // namespace

TEST_CASE("beta1/beta2 follow the shear relations and are never stale") {
    qg::QgParams p = tiny_params();
    const double c1 = p.kd2() / (1.0 + p.H1 / p.H2);
    CHECK(p.beta1() == doctest::Approx(p.beta + c1 * p.Ubar1).epsilon(1e-15));
    CHECK(p.beta2() == doctest::Approx(p.beta - (p.H1 / p.H2) * c1 * p.Ubar1).epsilon(1e-15));
    p.Ubar1 *= 2.0;  // derived values track the primitives
    CHECK(p.beta1() == doctest::Approx(p.beta + 2.0 * c1 * 0.025).epsilon(1e-15));
    qg::QgParams bad = p;
    bad.H1 = 0.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("pv inversion: zero in, zero out; round trips to 1e-12") {
    const qg::QgParams p = tiny_params();
    const GridPtr g = p.make_grid();
    SpectralField zero(g, 2);
    const auto psi0 = qg::invert_pv(zero, p);
    for (const auto& c : psi0.c) CHECK(std::abs(c) == 0.0);

    for (uint64_t seed : {11ull, 12ull, 13ull}) {
        auto q = spectral::forward(random_band_limited(g, seed, 0.9, 1e-6), g);
        const auto psi = qg::invert_pv(q, p);
        const auto back = qg::pv_of(psi, p);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < q.c.size(); ++i) {
            num += std::norm(back.c[i] - q.c[i]);
            den += std::norm(q.c[i]);
        }
        CHECK(std::sqrt(num / den) < 1e-12);
    }
}

TEST_CASE("barotropic equal-layer inversion reduces to -q/kappa^2") {
    qg::QgParams p = tiny_params();
    p.H2 = p.H1;  // equal layers
    const GridPtr g = p.make_grid();
    SpectralField q(g, 2);
    const int j = 3, i = 2;
    q.at(0, j, i) = {2.0, -1.0};
    q.at(1, j, i) = {2.0, -1.0};
    const auto psi = qg::invert_pv(q, p);
    const double k2 = g->kappa2[j * g->nkx() + i];
    const cplx expect = cplx(2.0, -1.0) / cplx(-k2);
    CHECK(std::abs(psi.at(0, j, i) - expect) < 1e-14 * std::abs(expect));
    CHECK(std::abs(psi.at(1, j, i) - expect) < 1e-14 * std::abs(expect));
}

TEST_CASE("tendency of zero state is zero; zonally uniform state is steady") {
    qg::QgParams p = tiny_params();
    const GridPtr g = p.make_grid();
    SpectralField zero(g, 2);
    const auto t0 = qg::tendency(zero, p);
    for (const auto& c : t0.c) CHECK(std::abs(c) == 0.0);

    // q depending on y only, beta = gamma = Ubar = 0: every term carries d/dx
    p.beta = 0.0;
    p.gamma = 0.0;
    p.Ubar1 = 0.0;
    LayeredField f(2, 32, 32);
    for (int l = 0; l < 2; ++l)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                f.at(l, y, x) = 1e-6 * std::sin(2.0 * M_PI * y / 32.0 * (l + 1));
    const auto t = qg::tendency(spectral::forward(f, g), p);
    CHECK(std::sqrt(spectral::mean_square(t)) < 1e-18);
}

TEST_CASE("advective dynamics conserve energy and enstrophy semi-discretely") {
    qg::QgParams p = tiny_params();
    p.beta = 0.0;
    p.gamma = 0.0;
    p.Ubar1 = 0.0;
    const GridPtr g = p.make_grid();
    const auto f = random_band_limited(g, 77, 0.3, 1e-6);
    const auto q = spectral::forward(f, g);
    qg::StepOptions opts;
    opts.ssd = false;
    const auto t = qg::tendency(q, p, opts);

    // dE/dt = -<psi_w, dq/dt> and dZ/dt = <q_w, dq/dt> vanish for advection
    const auto psi = qg::invert_pv(q, p);
    const double w1 = p.H1 / (p.H1 + p.H2), w2 = p.H2 / (p.H1 + p.H2);
    SpectralField psi_w = psi, q_w = q;
    for (std::size_t i = 0; i < psi.layer_size(); ++i) {
        psi_w.layer(0)[i] *= w1;
        psi_w.layer(1)[i] *= w2;
        q_w.layer(0)[i] *= w1;
        q_w.layer(1)[i] *= w2;
    }
    const double e_scale =
        std::sqrt(spectral::mean_square(psi_w)) * std::sqrt(spectral::mean_square(t));
    const double z_scale =
        std::sqrt(spectral::mean_square(q_w)) * std::sqrt(spectral::mean_square(t));
    CHECK(std::abs(spectral::inner_mean(psi_w, t)) < 1e-10 * e_scale);
    CHECK(std::abs(spectral::inner_mean(q_w, t)) < 1e-10 * z_scale);

    // single Euler step: the O(dt^2) drift stays below 1e-8 relative for a
    // time step well inside the stability region
    qg::QgParams ps = p;
    ps.dt = 20.0;
    qg::Stepper st(ps, f, opts);
    const double e0 = st.energy(), z0 = st.enstrophy();
    st.step();
    CHECK(std::abs(st.energy() - e0) < 1e-8 * std::abs(e0));
    CHECK(std::abs(st.enstrophy() - z0) < 1e-8 * std::abs(z0));
}

TEST_CASE("zero state stays zero under stepping") {
    const qg::QgParams p = tiny_params();
    qg::Stepper st(p, LayeredField(2, 32, 32));
    for (int i = 0; i < 5; ++i) st.step();
    CHECK(st.state().max_abs() == 0.0);
    CHECK(st.time() == doctest::Approx(5 * p.dt));
}

TEST_CASE("linear single-mode evolution matches the exact Rossby dispersion") {
    // advection and mean flow disabled: dq/dt = -i kx diag(beta) M^{-1} q
    qg::QgParams p = tiny_params();
    p.gamma = 0.0;
    p.Ubar1 = 0.0;
    p.dt = 300.0;
    const GridPtr g = p.make_grid();
    const int mi = 2, mj = 1;
    const double kx = g->kx[mi], k2 = g->kappa2[mj * g->nkx() + mi];
    const double c1 = p.coupling1(), c2 = p.coupling2();

    const double det = k2 * (k2 + c1 + c2);
    const Mat2 Minv{{{cplx(-(k2 + c2) / det), cplx(-c1 / det)},
                     {cplx(-c2 / det), cplx(-(k2 + c1) / det)}}};
    Mat2 A;
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c)
            A[r][c] = cplx(0.0, -kx) * (r == 0 ? p.beta1() : p.beta2()) * Minv[r][c];

    LayeredField f(2, 32, 32);
    const double amp1 = 1e-6, amp2 = 0.4e-6;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const double ph = g->kx[mi] * (x * p.Lx / 32.0) + g->ky[mj] * (y * p.Ly / 32.0);
            f.at(0, y, x) = amp1 * std::cos(ph);
            f.at(1, y, x) = amp2 * std::cos(ph + 0.3);
        }

    qg::StepOptions opts;
    opts.advection = false;
    opts.mean_flow = false;
    opts.friction = false;
    opts.ssd = false;
    qg::Stepper st(p, f, opts);
    const Vec2 v0{st.state_spectral().at(0, mj, mi), st.state_spectral().at(1, mj, mi)};

    const int nsteps = 200;
    for (int n = 0; n < nsteps; ++n) st.step();
    const Vec2 exact = expm_apply(A, v0, nsteps * p.dt);
    const Vec2 got{st.state_spectral().at(0, mj, mi), st.state_spectral().at(1, mj, mi)};

    // AB3 local error is O(dt^4), O(dt^3) accumulated per unit time
    const double omega = std::abs(A[0][0]) + std::abs(A[0][1]);
    const double tol = 50.0 * nsteps * std::pow(omega * p.dt, 3) + 1e-12;
    CHECK(std::abs(got[0] - exact[0]) / std::abs(v0[0]) < tol);
    CHECK(std::abs(got[1] - exact[1]) / std::abs(v0[1]) < tol);

    // linear diagonal dynamics must not leak into other modes
    double leak = 0.0;
    for (int l = 0; l < 2; ++l)
        for (int j = 0; j < 32; ++j)
            for (int i = 0; i < g->nkx(); ++i)
                if (!(j == mj && i == mi))
                    leak = std::max(leak, std::abs(st.state_spectral().at(l, j, i)));
    CHECK(leak < 1e-12 * std::abs(v0[0]));
}

TEST_CASE("identical initial states give bitwise identical trajectories") {
    const qg::QgParams p = tiny_params();
    const GridPtr g = p.make_grid();
    const auto f = random_band_limited(g, 5, 0.4, 1e-6);
    qg::Stepper a(p, f), b(p, f);
    for (int i = 0; i < 10; ++i) {
        a.step();
        b.step();
    }
    CHECK(a.state().v == b.state().v);
}

TEST_CASE("instability is detected as a typed error") {
    qg::QgParams p = tiny_params();
    p.dt = 5.0e5;  // wildly unstable time step
    const GridPtr g = p.make_grid();
    const auto f = random_band_limited(g, 6, 0.4, 1e-5);
    CHECK_THROWS_AS(
        [&] {
            qg::Stepper st(p, f);
            for (int i = 0; i < 2000; ++i) st.step();
        }(),
        InstabilityError);
}

TEST_CASE("spin_up: zero duration returns the initial noise; seeds reproduce") {
    const qg::QgParams p = tiny_params();
    const auto a = qg::spin_up(p, 99, 0.0);
    const auto b = qg::initial_noise(p, 99);
    CHECK(a.v == b.v);
    CHECK(a.rms() == doctest::Approx(1e-7).epsilon(1e-12));
    const auto c = qg::spin_up(p, 99, 20 * p.dt);
    const auto d = qg::spin_up(p, 99, 20 * p.dt);
    CHECK(c.v == d.v);
    CHECK(c.finite());
}
