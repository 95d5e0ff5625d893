#include "cgqg/closure.hpp"

#include <cmath>
#include <stdexcept>

#include "cgqg/common.hpp"
#include "cgqg/rng.hpp"
#include "cgqg/spectral.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cgqg::closure {

int ClosureFamily::theta_size() const {
    switch (kind) {
        case FamilyKind::LinearSpectral:
            return stochastic ? 2 * bands : bands;
        case FamilyKind::LocalStencil: {
            const int in_ch = stochastic ? 4 : 2;
            return 2 * in_ch * 25 + 2;  // two output channels + biases
        }
    }
    throw std::invalid_argument("unknown closure family");
}

std::string ClosureFamily::name() const {
    std::string base = kind == FamilyKind::LinearSpectral ? "linear-spectral" : "local-stencil";
    return base + (stochastic ? "" : "-det");
}

ClosureFamily ClosureFamily::parse(const std::string& name, bool stochastic, int bands) {
    ClosureFamily f;
    if (name == "linear-spectral")
        f.kind = FamilyKind::LinearSpectral;
    else if (name == "local-stencil")
        f.kind = FamilyKind::LocalStencil;
    else
        throw ConfigError("unknown closure family: " + name);
    f.stochastic = stochastic;
    f.bands = bands;
    if (f.kind == FamilyKind::LinearSpectral && bands < 1)
        throw ConfigError("linear-spectral closure needs bands >= 1");
    return f;
}

void ClosureParams::validate() const {
    if (int(theta.size()) != family.theta_size())
        throw ConfigError("ClosureParams: theta length does not match family descriptor");
}

NoiseField make_noise(const GridPtr& g, uint64_t seed, uint32_t member, uint64_t step) {
    NoiseField xi;
    xi.values = LayeredField(2, g->ny, g->nx);
    xi.seed = seed;
    xi.member = member;
    xi.step = step;
    rng::CounterStream stream(seed, rng::Stream::ClosureNoise, step, member);
    stream.fill_gaussian(std::span<double>(xi.values.v.data(), xi.values.v.size()));
    return xi;
}

namespace {

// Radial band index in [0, bands): uniform partition of [0, kmax].
inline int band_of(double kappa, double kmax, int bands) {
    int b = int(kappa / kmax * bands);
    return std::min(b, bands - 1);
}

void enforce_constraints(SpectralField& mhat) {
    spectral::apply_highpass(mhat);
    for (int l = 0; l < mhat.nl; ++l) mhat.layer(l)[0] = 0.0;
}

LayeredField synthesize(SpectralField& mhat) {
    enforce_constraints(mhat);
    LayeredField m = spectral::inverse(mhat);
    // remove the roundoff-level residual so the per-layer mean is exactly zero
    const std::size_t n = m.layer_size();
    for (int l = 0; l < m.nl; ++l) {
        double* p = m.layer(l);
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += p[i];
        mean /= double(n);
        for (std::size_t i = 0; i < n; ++i) p[i] -= mean;
    }
    return m;
}

LayeredField apply_linear_spectral(const LayeredField& x, const NoiseField* xi,
                                   const ClosureParams& p, const GridPtr& g) {
    const int bands = p.family.bands;
    const double* gain_state = p.theta.data();
    const double* gain_noise = p.family.stochastic ? p.theta.data() + bands : nullptr;
    const double sigma_ref = x.rms();

    SpectralField xhat = spectral::forward(x, g);
    SpectralField mhat(g, 2);
    const int n = g->spectral_size();
    for (int l = 0; l < 2; ++l) {
        const auto* src = xhat.layer(l);
        auto* dst = mhat.layer(l);
        for (int i = 0; i < n; ++i) {
            const int b = band_of(std::sqrt(g->kappa2[i]), g->kmax, bands);
            dst[i] = gain_state[b] * src[i];
        }
    }
    if (gain_noise && xi) {
        SpectralField nhat = spectral::forward(xi->values, g);
        for (int l = 0; l < 2; ++l) {
            const auto* src = nhat.layer(l);
            auto* dst = mhat.layer(l);
            for (int i = 0; i < n; ++i) {
                const int b = band_of(std::sqrt(g->kappa2[i]), g->kmax, bands);
                dst[i] += gain_noise[b] * sigma_ref * src[i];
            }
        }
    }
    return synthesize(mhat);
}

LayeredField apply_local_stencil(const LayeredField& x, const NoiseField* xi,
                                 const ClosureParams& p, const GridPtr& g) {
    const int in_ch = p.family.stochastic ? 4 : 2;
    const int ny = g->ny, nx = g->nx;
    const double sigma_ref = x.rms();
    const double inv_sigma = sigma_ref > 0 ? 1.0 / sigma_ref : 0.0;

    // channel views: normalized state then raw noise
    std::vector<const double*> chan(in_ch);
    chan[0] = x.layer(0);
    chan[1] = x.layer(1);
    if (in_ch == 4) {
        chan[2] = xi->values.layer(0);
        chan[3] = xi->values.layer(1);
    }
    const double chan_scale[4] = {inv_sigma, inv_sigma, 1.0, 1.0};

    // theta layout: w[out][in][5][5], then bias[out]
    const double* w = p.theta.data();
    const double* bias = p.theta.data() + 2 * in_ch * 25;

    LayeredField h(2, ny, nx);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) collapse(2)
#endif
    for (int oc = 0; oc < 2; ++oc) {
        for (int j = 0; j < ny; ++j) {
            double* out = h.layer(oc);
            for (int i = 0; i < nx; ++i) {
                double acc = bias[oc];
                for (int ic = 0; ic < in_ch; ++ic) {
                    const double* src = chan[ic];
                    const double cs = chan_scale[ic];
                    const double* ww = w + ((oc * in_ch + ic) * 25);
                    for (int dy = -2; dy <= 2; ++dy) {
                        const int jj = (j + dy + ny) % ny;
                        const double* row = src + std::size_t(jj) * nx;
                        for (int dx = -2; dx <= 2; ++dx) {
                            const int ii = (i + dx + nx) % nx;
                            acc += ww[(dy + 2) * 5 + (dx + 2)] * cs * row[ii];
                        }
                    }
                }
                out[std::size_t(j) * nx + i] = std::tanh(acc) * sigma_ref;
            }
        }
    }
    SpectralField mhat = spectral::forward(h, g);
    return synthesize(mhat);
}

}  // namespace

LayeredField apply_closure(const LayeredField& x, const NoiseField* xi,
                           const ClosureParams& p, const GridPtr& g) {
    p.validate();
    if (x.nl != 2 || x.ny != g->ny || x.nx != g->nx)
        throw std::invalid_argument("apply_closure: state shape mismatch");
    if (p.family.noise_channels() > 0) {
        if (!xi || !xi->values.same_shape(x))
            throw std::invalid_argument("apply_closure: noise shape mismatch");
    }
    LayeredField m = p.family.kind == FamilyKind::LinearSpectral
                         ? apply_linear_spectral(x, xi, p, g)
                         : apply_local_stencil(x, xi, p, g);
    m.time = x.time;
    return m;
}

ClosedStepper::ClosedStepper(const qg::QgParams& p, LayeredField x0, ClosureParams cp,
                             uint64_t noise_seed, uint32_t member)
    : stepper_(p, std::move(x0)), params_(std::move(cp)), noise_seed_(noise_seed),
      member_(member) {
    params_.validate();
}

void ClosedStepper::step() {
    LayeredField m;
    if (params_.family.stochastic) {
        const NoiseField xi =
            make_noise(stepper_.grid(), noise_seed_, member_, uint64_t(stepper_.step_count()));
        m = apply_closure(stepper_.state(), &xi, params_, stepper_.grid());
    } else {
        m = apply_closure(stepper_.state(), nullptr, params_, stepper_.grid());
    }
    stepper_.step();
    stepper_.add_increment(m);
}

LayeredField closed_step(const LayeredField& x, const NoiseField* xi,
                         const ClosureParams& cp, const qg::QgParams& qp) {
    qg::Stepper st(qp, x);
    LayeredField m = apply_closure(x, xi, cp, st.grid());
    st.step();
    st.add_increment(m);
    return st.state();
}

EnsembleForecast rollout_ensemble(const LayeredField& x0, const ClosureParams& cp,
                                  const qg::QgParams& qp, int w, int S, uint64_t seed) {
    if (S < 1 || w < 1) throw std::invalid_argument("rollout_ensemble: need S >= 1, w >= 1");
    cp.validate();
    EnsembleForecast out;
    out.initial = x0;
    out.S = S;
    out.w = w;
    out.seed = seed;
    out.traj.assign(S, {});
    out.failed_at.assign(S, w);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int s = 0; s < S; ++s) {
        auto& traj = out.traj[s];
        traj.reserve(w);
        try {
            ClosedStepper cs(qp, x0, cp, seed, uint32_t(s));
            for (int n = 0; n < w; ++n) {
                cs.step();
                traj.push_back(cs.state());
            }
        } catch (const InstabilityError&) {
            out.failed_at[s] = int(traj.size());
        }
    }
    return out;
}

}  // namespace cgqg::closure
