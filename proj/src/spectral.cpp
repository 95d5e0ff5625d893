#include "cgqg/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cgqg::spectral {

namespace {

// Per-size FFTW plan pair. Plans are created once under a lock with
// FFTW_ESTIMATE so the algorithm choice (and hence roundoff) is identical
// on every run; execution goes through the thread-safe new-array interface
// on thread-local scratch buffers, which also works around c2r destroying
// its input.
struct PlanPair {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    int align_r = 0;  // fftw_alignment_of of the planning buffers
    int align_c = 0;
};

class FftEngine {
  public:
    static FftEngine& instance() {
        static FftEngine e;
        return e;
    }

    // hot path: per-thread cache of stable plan addresses, no lock
    const PlanPair& plans(int nx, int ny) {
        thread_local std::map<std::pair<int, int>, const PlanPair*> cache;
        const auto key = std::make_pair(nx, ny);
        auto it = cache.find(key);
        if (it != cache.end()) return *it->second;
        const PlanPair& p = plans_locked(key);
        cache.emplace(key, &p);
        return p;
    }

  private:
    const PlanPair& plans_locked(std::pair<int, int> key) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;

        const auto [nx, ny] = key;
        const int nr = nx * ny;
        const int nc = ny * (nx / 2 + 1);
        double* rbuf = fftw_alloc_real(nr);
        fftw_complex* cbuf = fftw_alloc_complex(nc);
        PlanPair p;
        p.r2c = fftw_plan_dft_r2c_2d(ny, nx, rbuf, cbuf, FFTW_ESTIMATE);
        p.c2r = fftw_plan_dft_c2r_2d(ny, nx, cbuf, rbuf, FFTW_ESTIMATE);
        p.align_r = fftw_alignment_of(rbuf);
        p.align_c = fftw_alignment_of(reinterpret_cast<double*>(cbuf));
        fftw_free(rbuf);
        fftw_free(cbuf);
        if (!p.r2c || !p.c2r) throw std::runtime_error("FFTW plan creation failed");
        return plans_.emplace(key, p).first->second;
    }

    FftEngine() = default;
    std::mutex mu_;
    std::map<std::pair<int, int>, PlanPair> plans_;  // node-based: stable refs
};

struct Scratch {
    int nx = -1, ny = -1;
    double* r = nullptr;
    fftw_complex* c = nullptr;

    void ensure(int nx_, int ny_) {
        if (nx == nx_ && ny == ny_) return;
        release();
        nx = nx_;
        ny = ny_;
        r = fftw_alloc_real(std::size_t(nx) * ny);
        c = fftw_alloc_complex(std::size_t(ny) * (nx / 2 + 1));
    }
    void release() {
        if (r) fftw_free(r);
        if (c) fftw_free(c);
        r = nullptr;
        c = nullptr;
    }
    ~Scratch() { release(); }
};

thread_local Scratch tl_scratch;

inline bool aligned_like(const void* p, int proto) {
    return fftw_alignment_of(const_cast<double*>(static_cast<const double*>(p))) == proto;
}

// r2c out-of-place preserves its input, so user buffers are used directly
// whenever their alignment matches the planning buffers.
void exec_r2c(int nx, int ny, const double* in, std::complex<double>* out) {
    const PlanPair& p = FftEngine::instance().plans(nx, ny);
    auto* cout = reinterpret_cast<fftw_complex*>(out);
    if (aligned_like(in, p.align_r) && aligned_like(out, p.align_c)) {
        fftw_execute_dft_r2c(p.r2c, const_cast<double*>(in), cout);
        return;
    }
    tl_scratch.ensure(nx, ny);
    std::copy(in, in + std::size_t(nx) * ny, tl_scratch.r);
    fftw_execute_dft_r2c(p.r2c, tl_scratch.r, tl_scratch.c);
    const std::size_t nc = std::size_t(ny) * (nx / 2 + 1);
    std::copy(reinterpret_cast<std::complex<double>*>(tl_scratch.c),
              reinterpret_cast<std::complex<double>*>(tl_scratch.c) + nc, out);
}

// multi-dimensional c2r destroys its input; this variant is allowed to
void exec_c2r_destructive(int nx, int ny, std::complex<double>* in, double* out) {
    const PlanPair& p = FftEngine::instance().plans(nx, ny);
    if (aligned_like(in, p.align_c) && aligned_like(out, p.align_r)) {
        fftw_execute_dft_c2r(p.c2r, reinterpret_cast<fftw_complex*>(in), out);
        return;
    }
    tl_scratch.ensure(nx, ny);
    const std::size_t nc = std::size_t(ny) * (nx / 2 + 1);
    std::copy(in, in + nc, reinterpret_cast<std::complex<double>*>(tl_scratch.c));
    fftw_execute_dft_c2r(p.c2r, tl_scratch.c, tl_scratch.r);
    std::copy(tl_scratch.r, tl_scratch.r + std::size_t(nx) * ny, out);
}

void exec_c2r(int nx, int ny, const std::complex<double>* in, double* out) {
    const PlanPair& p = FftEngine::instance().plans(nx, ny);
    tl_scratch.ensure(nx, ny);
    const std::size_t nc = std::size_t(ny) * (nx / 2 + 1);
    std::copy(in, in + nc, reinterpret_cast<std::complex<double>*>(tl_scratch.c));
    if (aligned_like(out, p.align_r)) {
        fftw_execute_dft_c2r(p.c2r, tl_scratch.c, out);
        return;
    }
    fftw_execute_dft_c2r(p.c2r, tl_scratch.c, tl_scratch.r);
    std::copy(tl_scratch.r, tl_scratch.r + std::size_t(nx) * ny, out);
}

void apply_table(SpectralField& f, const std::vector<double>& table) {
    const int n = int(f.layer_size());
    for (int l = 0; l < f.nl; ++l) {
        auto* c = f.layer(l);
        for (int i = 0; i < n; ++i) c[i] *= table[i];
    }
}

}  // namespace

void forward_into(const LayeredField& f, const GridPtr& g, SpectralField& out) {
    if (f.nx != g->nx || f.ny != g->ny)
        throw std::invalid_argument("forward: field dimensions do not match grid");
    if (out.grid.get() != g.get() || out.nl != f.nl) out = SpectralField(g, f.nl);
    for (int l = 0; l < f.nl; ++l) exec_r2c(g->nx, g->ny, f.layer(l), out.layer(l));
}

SpectralField forward(const LayeredField& f, const GridPtr& g) {
    SpectralField out;
    forward_into(f, g, out);
    return out;
}

void inverse_into(const SpectralField& f, LayeredField& out) {
    const Grid& g = *f.grid;
    if (out.nl != f.nl || out.ny != g.ny || out.nx != g.nx)
        out = LayeredField(f.nl, g.ny, g.nx);
    for (int l = 0; l < f.nl; ++l) exec_c2r(g.nx, g.ny, f.layer(l), out.layer(l));
    const double scale = 1.0 / (double(g.nx) * g.ny);
    for (double& x : out.v) x *= scale;
}

LayeredField inverse(const SpectralField& f) {
    LayeredField out;
    inverse_into(f, out);
    return out;
}

SpectralField laplacian(const SpectralField& f) {
    SpectralField out = f;
    const auto& k2 = f.grid->kappa2;
    const int n = int(f.layer_size());
    for (int l = 0; l < f.nl; ++l) {
        auto* c = out.layer(l);
        for (int i = 0; i < n; ++i) c[i] *= -k2[i];
    }
    return out;
}

SpectralField derivative_x(const SpectralField& f) {
    SpectralField out = f;
    const Grid& g = *f.grid;
    const int nkx = g.nkx();
    for (int l = 0; l < f.nl; ++l) {
        auto* c = out.layer(l);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < nkx; ++i) {
                const bool nyq = (i == nkx - 1) || (j == g.ny / 2);
                c[j * nkx + i] *= nyq ? 0.0 : std::complex<double>(0.0, g.kx[i]);
            }
    }
    return out;
}

SpectralField derivative_y(const SpectralField& f) {
    SpectralField out = f;
    const Grid& g = *f.grid;
    const int nkx = g.nkx();
    for (int l = 0; l < f.nl; ++l) {
        auto* c = out.layer(l);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < nkx; ++i) {
                const bool nyq = (i == nkx - 1) || (j == g.ny / 2);
                c[j * nkx + i] *= nyq ? 0.0 : std::complex<double>(0.0, g.ky[j]);
            }
    }
    return out;
}

namespace {

// writes the dealiased spectral x- or y-derivative of layer l of f into dst
void deriv_dealias_layer(const SpectralField& f, int l, bool x_axis,
                         std::complex<double>* dst) {
    const Grid& g = *f.grid;
    const int nkx = g.nkx();
    const auto* src = f.layer(l);
    for (int j = 0; j < g.ny; ++j) {
        const double ky = g.ky[j];
        for (int i = 0; i < nkx; ++i) {
            const int idx = j * nkx + i;
            const bool nyq = (i == nkx - 1) || (j == g.ny / 2);
            const double k = nyq ? 0.0 : (x_axis ? g.kx[i] : ky);
            const double m = g.dealias[idx] * k;
            const auto v = src[idx];
            dst[idx] = {-m * v.imag(), m * v.real()};  // (i k m) v
        }
    }
}

}  // namespace

namespace {

// per-thread work buffers; large allocations in the stepping loop would hit
// mmap round trips otherwise
struct JacobianWorkspace {
    avec<double> fx, fy, gx, gy, prod;
    void ensure(std::size_t n) {
        if (fx.size() != n) {
            fx.resize(n);
            fy.resize(n);
            gx.resize(n);
            gy.resize(n);
            prod.resize(n);
        }
    }
};

}  // namespace

void jacobian_into(const SpectralField& psi, const SpectralField& q, SpectralField& out) {
    if (psi.grid.get() != q.grid.get() || psi.nl != q.nl)
        throw std::invalid_argument("jacobian: grid mismatch");
    const GridPtr& g = psi.grid;
    const int nl = psi.nl;
    const std::size_t np = std::size_t(g->nx) * g->ny;

    thread_local JacobianWorkspace ws;
    ws.ensure(np * nl);
    // raw pointers hoisted out of the parallel region: a thread_local named
    // inside it would resolve to each worker's own (empty) workspace
    double* const bufs[4] = {ws.fx.data(), ws.fy.data(), ws.gx.data(), ws.gy.data()};

    // 4*nl independent derivative syntheses; fixed task->buffer mapping keeps
    // results identical for any thread count. Small grids stay serial, their
    // per-task work is below the region overhead.
    auto task = [&](int t) {
        const int l = t / 4;
        thread_local avec<std::complex<double>> tmp;  // per worker, sized here
        tmp.resize(std::size_t(g->spectral_size()));
        switch (t % 4) {
            case 0: deriv_dealias_layer(psi, l, true, tmp.data()); break;
            case 1: deriv_dealias_layer(psi, l, false, tmp.data()); break;
            case 2: deriv_dealias_layer(q, l, true, tmp.data()); break;
            case 3: deriv_dealias_layer(q, l, false, tmp.data()); break;
        }
        exec_c2r_destructive(g->nx, g->ny, tmp.data(), bufs[t % 4] + l * np);
    };
    if (np >= 4096) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int t = 0; t < 4 * nl; ++t) task(t);
    } else {
        for (int t = 0; t < 4 * nl; ++t) task(t);
    }

    const double scale = 1.0 / (double(g->nx) * g->ny);
    double* const prod = ws.prod.data();
    for (std::size_t i = 0; i < np * nl; ++i)
        prod[i] = (bufs[0][i] * bufs[3][i] - bufs[1][i] * bufs[2][i]) * scale * scale;

    if (out.grid.get() != g.get() || out.nl != nl) out = SpectralField(g, nl);
    for (int l = 0; l < nl; ++l)
        exec_r2c(g->nx, g->ny, prod + l * np, out.layer(l));
    apply_dealias(out);
}

SpectralField jacobian(const SpectralField& psi, const SpectralField& q) {
    SpectralField out;
    jacobian_into(psi, q, out);
    return out;
}

void apply_ssd(SpectralField& f) { apply_table(f, f.grid->ssd); }
void apply_dealias(SpectralField& f) { apply_table(f, f.grid->dealias); }
void apply_highpass(SpectralField& f) { apply_table(f, f.grid->highpass); }

double inner_mean(const SpectralField& a, const SpectralField& b) {
    if (a.grid.get() != b.grid.get() || a.nl != b.nl)
        throw std::invalid_argument("inner_mean: grid mismatch");
    const Grid& g = *a.grid;
    const int nkx = g.nkx();
    const double norm = 1.0 / (double(g.nx) * g.nx * double(g.ny) * g.ny);
    double s = 0.0;
    for (int l = 0; l < a.nl; ++l) {
        const auto* ca = a.layer(l);
        const auto* cb = b.layer(l);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < nkx; ++i) {
                // interior kx columns represent a conjugate pair of the full plane
                const double w = (i == 0 || i == nkx - 1) ? 1.0 : 2.0;
                const auto va = ca[j * nkx + i];
                const auto vb = cb[j * nkx + i];
                s += w * (va.real() * vb.real() + va.imag() * vb.imag());
            }
    }
    return s * norm;
}

double mean_square(const SpectralField& f) { return inner_mean(f, f); }

}  // namespace cgqg::spectral
