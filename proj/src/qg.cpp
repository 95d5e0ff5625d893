#include "cgqg/qg.hpp"

#include <cmath>
#include <stdexcept>

#include "cgqg/common.hpp"
#include "cgqg/rng.hpp"
#include "cgqg/spectral.hpp"

namespace cgqg::qg {

void QgParams::validate() const {
    if (!(Lx > 0 && Ly > 0 && H1 > 0 && H2 > 0 && dt > 0 && rd > 0))
        throw ConfigError("QgParams: Lx, Ly, H1, H2, dt, rd must be strictly positive");
    if (nx < 8 || ny < 8 || nx % 2 || ny % 2)
        throw ConfigError("QgParams: nx, ny must be even and >= 8");
}

GridPtr QgParams::make_grid() const { return cgqg::make_grid(nx, ny, Lx, Ly); }

uint64_t QgParams::hash() const {
    std::string s;
    for (double v : {Lx, Ly, H1, H2, Ubar1, beta, gamma, rd, dt}) s += fmt_g17(v) + ";";
    s += std::to_string(nx) + ";" + std::to_string(ny);
    return fnv1a64(s);
}

QgParams QgParams::jet(int nx_, int ny_, double dt_) {
    QgParams p;
    p.nx = nx_;
    p.ny = ny_;
    p.dt = dt_;
    return p;
}

void invert_pv_into(const SpectralField& q, const QgParams& p, SpectralField& psi) {
    const Grid& g = *q.grid;
    if (q.nl != 2) throw std::invalid_argument("invert_pv: expected two layers");
    if (psi.grid.get() != q.grid.get() || psi.nl != 2) psi = SpectralField(q.grid, 2);
    const double c1 = p.coupling1(), c2 = p.coupling2();
    const int n = g.spectral_size();
    const auto* q1 = q.layer(0);
    const auto* q2 = q.layer(1);
    auto* p1 = psi.layer(0);
    auto* p2 = psi.layer(1);
    for (int i = 0; i < n; ++i) {
        const double k2 = g.kappa2[i];
        if (k2 == 0.0) {
            p1[i] = p2[i] = 0.0;  // gauge: zero mode of psi fixed to 0
            continue;
        }
        // q = M psi with M = [[-(k2+c1), c1], [c2, -(k2+c2)]]
        const double det = k2 * (k2 + c1 + c2);
        const auto a = q1[i], b = q2[i];
        p1[i] = (-(k2 + c2) * a - c1 * b) / det;
        p2[i] = (-c2 * a - (k2 + c1) * b) / det;
    }
}

SpectralField invert_pv(const SpectralField& q, const QgParams& p) {
    SpectralField psi;
    invert_pv_into(q, p, psi);
    return psi;
}

SpectralField pv_of(const SpectralField& psi, const QgParams& p) {
    const Grid& g = *psi.grid;
    if (psi.nl != 2) throw std::invalid_argument("pv_of: expected two layers");
    SpectralField q(psi.grid, 2);
    const double c1 = p.coupling1(), c2 = p.coupling2();
    const int n = g.spectral_size();
    const auto* p1 = psi.layer(0);
    const auto* p2 = psi.layer(1);
    auto* q1 = q.layer(0);
    auto* q2 = q.layer(1);
    for (int i = 0; i < n; ++i) {
        const double k2 = g.kappa2[i];
        q1[i] = -k2 * p1[i] + c1 * (p2[i] - p1[i]);
        q2[i] = -k2 * p2[i] + c2 * (p1[i] - p2[i]);
    }
    return q;
}

void tendency_into(const SpectralField& q, const QgParams& p, const StepOptions& opts,
                   SpectralField& t) {
    const Grid& g = *q.grid;
    thread_local SpectralField psi;
    invert_pv_into(q, p, psi);

    if (opts.advection) {
        spectral::jacobian_into(psi, q, t);  // negated below
    } else {
        if (t.grid.get() != q.grid.get() || t.nl != q.nl) t = SpectralField(q.grid, q.nl);
        std::fill(t.c.begin(), t.c.end(), std::complex<double>(0.0, 0.0));
    }

    const int n = g.spectral_size();
    const int nkx = g.nkx();
    const double b1 = p.beta1(), b2 = p.beta2();
    auto* t1 = t.layer(0);
    auto* t2 = t.layer(1);
    const auto* q1 = q.layer(0);
    const auto* p1 = psi.layer(0);
    const auto* p2 = psi.layer(1);
    for (int idx = 0; idx < n; ++idx) {
        const int i = idx % nkx;
        const int j = idx / nkx;
        const bool nyq = (i == nkx - 1) || (j == g.ny / 2);
        const std::complex<double> ikx(0.0, nyq ? 0.0 : g.kx[i]);
        std::complex<double> a1 = -t1[idx];  // -J(psi1, q1)
        std::complex<double> a2 = -t2[idx];
        if (opts.beta_term) {
            a1 -= b1 * (ikx * p1[idx]);
            a2 -= b2 * (ikx * p2[idx]);
        }
        if (opts.mean_flow) a1 -= p.Ubar1 * (ikx * q1[idx]);
        if (opts.friction) a2 += p.gamma * g.kappa2[idx] * p2[idx];  // -gamma \nabla^2 psi2
        t1[idx] = a1;
        t2[idx] = a2;
    }
}

SpectralField tendency(const SpectralField& q, const QgParams& p, const StepOptions& opts) {
    SpectralField t;
    tendency_into(q, p, opts, t);
    return t;
}

Stepper::Stepper(const QgParams& p, LayeredField q0, StepOptions opts)
    : params_(p), opts_(opts), grid_(p.make_grid()) {
    params_.validate();
    if (q0.nl != 2 || q0.ny != p.ny || q0.nx != p.nx)
        throw std::invalid_argument("Stepper: initial state shape mismatch");
    qhat_ = spectral::forward(q0, grid_);
    phys_ = std::move(q0);
    blowup_threshold_ = 1.0e6 * std::max(phys_.rms(), 1.0e-12);
    check_stability();
}

void Stepper::check_stability() {
    const double m = phys_.max_abs();
    if (!std::isfinite(m) || m > blowup_threshold_)
        throw InstabilityError(phys_.time, nstep_, m);
}

void Stepper::step() {
    // recycle the oldest history buffer as the new tendency target
    SpectralField f = std::move(tend_spare_);
    tendency_into(qhat_, params_, opts_, f);
    const double dt = params_.dt;
    double c0 = dt, c1 = 0.0, c2 = 0.0;
    if (nstep_ == 1) {
        c0 = dt * 1.5;
        c1 = dt * -0.5;
    } else if (nstep_ >= 2) {
        c0 = dt * 23.0 / 12.0;
        c1 = dt * -16.0 / 12.0;
        c2 = dt * 5.0 / 12.0;
    }
    // fused multistep update + filter, one pass over the state
    const int ns = grid_->spectral_size();
    const double* ssd = grid_->ssd.data();
    for (int l = 0; l < qhat_.nl; ++l) {
        auto* q = qhat_.layer(l);
        const auto* f0 = f.layer(l);
        const auto* f1 = nstep_ >= 1 ? tend_nm1_.layer(l) : nullptr;
        const auto* f2 = nstep_ >= 2 ? tend_nm2_.layer(l) : nullptr;
        for (int i = 0; i < ns; ++i) {
            std::complex<double> acc = q[i] + c0 * f0[i];
            if (f1) acc += c1 * f1[i];
            if (f2) acc += c2 * f2[i];
            q[i] = opts_.ssd ? acc * ssd[i] : acc;
        }
    }
    tend_spare_ = std::move(tend_nm2_);
    tend_nm2_ = std::move(tend_nm1_);
    tend_nm1_ = std::move(f);
    ++nstep_;
    const double t = phys_.time + dt;
    spectral::inverse_into(qhat_, phys_);
    phys_.time = t;
    check_stability();
}

void Stepper::add_increment(const LayeredField& m) {
    if (!m.same_shape(phys_)) throw std::invalid_argument("add_increment: shape mismatch");
    thread_local SpectralField mhat;
    spectral::forward_into(m, grid_, mhat);
    axpy(std::complex<double>(1.0, 0.0), mhat, qhat_);
    axpy(1.0, m, phys_);
    check_stability();
}

double total_energy(const SpectralField& q, const QgParams& p) {
    SpectralField psi = invert_pv(q, p);
    const double w1 = p.H1 / (p.H1 + p.H2), w2 = p.H2 / (p.H1 + p.H2);
    SpectralField psi_w = psi;
    const int n = int(psi.layer_size());
    for (int i = 0; i < n; ++i) psi_w.layer(0)[i] *= w1;
    for (int i = 0; i < n; ++i) psi_w.layer(1)[i] *= w2;
    return -0.5 * spectral::inner_mean(psi_w, q);
}

double total_enstrophy(const SpectralField& q, const QgParams& p) {
    const double w1 = p.H1 / (p.H1 + p.H2), w2 = p.H2 / (p.H1 + p.H2);
    SpectralField qw = q;
    const int n = int(q.layer_size());
    for (int i = 0; i < n; ++i) qw.layer(0)[i] *= w1;
    for (int i = 0; i < n; ++i) qw.layer(1)[i] *= w2;
    return 0.5 * spectral::inner_mean(qw, q);
}

double Stepper::energy() const { return total_energy(qhat_, params_); }
double Stepper::enstrophy() const { return total_enstrophy(qhat_, params_); }

LayeredField initial_noise(const QgParams& p, uint64_t seed) {
    const GridPtr g = p.make_grid();
    LayeredField white(2, p.ny, p.nx);
    rng::CounterStream stream(seed, rng::Stream::SpinupInit);
    stream.fill_gaussian(std::span<double>(white.v.data(), white.v.size()));
    SpectralField w = spectral::forward(white, g);
    // retain a mid-wavenumber band only
    const int n = g->spectral_size();
    for (int l = 0; l < 2; ++l) {
        auto* c = w.layer(l);
        for (int i = 0; i < n; ++i) {
            const double kappa = std::sqrt(g->kappa2[i]);
            if (kappa < 0.15 * g->kmax || kappa > 0.5 * g->kmax) c[i] = 0.0;
        }
    }
    LayeredField q0 = spectral::inverse(w);
    const double r = q0.rms();
    const double target = 1.0e-7;  // 1/s
    if (r > 0) {
        const double s = target / r;
        for (double& x : q0.v) x *= s;
    }
    return q0;
}

LayeredField spin_up(const QgParams& p, uint64_t seed, double duration_s) {
    if (duration_s < 0) throw std::invalid_argument("spin_up: duration must be >= 0");
    LayeredField q0 = initial_noise(p, seed);
    const long nsteps = std::lround(duration_s / p.dt);
    if (nsteps == 0) return q0;
    Stepper st(p, std::move(q0));
    for (long i = 0; i < nsteps; ++i) st.step();
    return st.state();
}

}  // namespace cgqg::qg
