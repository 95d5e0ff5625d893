// Benchmark comparing the OpenMP-parallel kernels against the serial
// reference implementations, and thread scaling of the solver hot paths.

#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cgqg/closure.hpp"
#include "cgqg/reference.hpp"
#include "cgqg/rng.hpp"
#include "cgqg/scoring.hpp"
#include "cgqg/spectral.hpp"

using namespace cgqg;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up (plan creation etc.)
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

LayeredField random_field(const GridPtr& g, uint64_t seed) {
    LayeredField f(2, g->ny, g->nx);
    rng::CounterStream s(seed, rng::Stream::MonteCarlo);
    s.fill_gaussian(std::span<double>(f.v.data(), f.v.size()));
    return f;
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace

int main() {
    const int nt = max_threads();
    std::printf("threads available: %d\n\n", nt);
    std::printf("%-42s %12s %12s %8s\n", "kernel", "serial ms", "parallel ms", "speedup");

    auto row = [](const char* name, double serial, double parallel) {
        std::printf("%-42s %12.3f %12.3f %7.2fx\n", name, serial, parallel, serial / parallel);
    };

    // naive DFT reference vs FFTW transform (32^2)
    {
        const auto g = make_grid(32, 32, 1e6, 1e6);
        const auto f = random_field(g, 1);
        const double t_ref = time_ms([&] { (void)ref::forward_naive(f, g); }, 3);
        const double t_fft = time_ms([&] { (void)spectral::forward(f, g); }, 200);
        row("forward transform 32^2 (naive DFT vs FFT)", t_ref, t_fft);
    }

    // QG tendency, 1 thread vs all threads (128^2)
    {
        const auto p = qg::QgParams::jet(128, 128, 900.0);
        const auto g = p.make_grid();
        auto f = random_field(g, 2);
        for (double& v : f.v) v *= 1e-6;
        const auto qhat = spectral::forward(f, g);
        set_threads(1);
        const double t1 = time_ms([&] { (void)qg::tendency(qhat, p); }, 50);
        set_threads(nt);
        const double tn = time_ms([&] { (void)qg::tendency(qhat, p); }, 50);
        row("qg tendency 128^2 (1 thread vs all)", t1, tn);
    }

    // ensemble rollout, 1 thread vs all threads (32^2, S=8, w=16)
    {
        const auto p = qg::QgParams::jet(32, 32, 7200.0);
        const auto g = p.make_grid();
        auto x0 = random_field(g, 3);
        for (double& v : x0.v) v *= 1e-6;
        closure::ClosureFamily fam{closure::FamilyKind::LinearSpectral, true, 8};
        auto cp = closure::ClosureParams::zeros(fam);
        cp.theta[8] = 0.002;  // small noise gain so members differ
        set_threads(1);
        const double t1 =
            time_ms([&] { (void)closure::rollout_ensemble(x0, cp, p, 16, 8, 7); }, 5);
        set_threads(nt);
        const double tn =
            time_ms([&] { (void)closure::rollout_ensemble(x0, cp, p, 16, 8, 7); }, 5);
        row("ensemble rollout S=8 w=16 (1 vs all)", t1, tn);

        // bitwise agreement across thread counts
        set_threads(1);
        const auto a = closure::rollout_ensemble(x0, cp, p, 16, 8, 7);
        set_threads(nt);
        const auto b = closure::rollout_ensemble(x0, cp, p, 16, 8, 7);
        bool same = true;
        for (int s = 0; s < a.S && same; ++s)
            for (int n = 0; n < a.w && same; ++n)
                same = a.traj[s][n].v == b.traj[s][n].v;
        std::printf("%-42s %s\n", "rollout bitwise identical across threads",
                    same ? "yes" : "NO");
    }

    // energy score, direct serial reference vs parallel kernel (S=20, D=2048)
    {
        const int S = 20, D = 2048;
        std::vector<double> members(std::size_t(S) * D), y(D);
        rng::CounterStream s(11, rng::Stream::MonteCarlo);
        s.fill_gaussian(members);
        rng::CounterStream sy(12, rng::Stream::MonteCarlo);
        sy.fill_gaussian(y);
        set_threads(nt);
        const double t_ref =
            time_ms([&] { (void)ref::energy_score_direct(members, S, D, y); }, 200);
        const double t_par = time_ms([&] { (void)scoring::energy_score(members, S, D, y); }, 200);
        row("energy score S=20 D=2048 (direct vs omp)", t_ref, t_par);
        const double a = ref::energy_score_direct(members, S, D, y);
        const double b = scoring::energy_score(members, S, D, y);
        std::printf("%-42s %s (|diff| = %.3g)\n", "score agreement direct vs parallel",
                    std::abs(a - b) < 1e-12 * std::abs(a) ? "yes" : "NO", std::abs(a - b));
    }

    return 0;
}
