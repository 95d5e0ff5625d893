#include "cgqg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cgqg/common.hpp"
#include "cgqg/rng.hpp"
#include "cgqg/scoring.hpp"
#include "cgqg/spectral.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cgqg::diagnostics {

namespace {

int n_bins(const Grid& g, double dk) { return int(std::floor(g.kmax / dk + 0.5)); }

// per-mode kinetic energy (domain-mean contribution) folded into bins
void accumulate_ke(const SpectralField& qhat, const qg::QgParams& p, std::vector<double>& bins,
                   double dk) {
    const Grid& g = *qhat.grid;
    const SpectralField psi = qg::invert_pv(qhat, p);
    const int nkx = g.nkx();
    const double w1 = p.H1 / (p.H1 + p.H2), w2 = p.H2 / (p.H1 + p.H2);
    const double norm = 1.0 / (double(g.nx) * g.nx * double(g.ny) * g.ny);
    const int B = int(bins.size());
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < nkx; ++i) {
            const int idx = j * nkx + i;
            const double k2 = g.kappa2[idx];
            if (k2 == 0.0) continue;
            const double colw = (i == 0 || i == nkx - 1) ? 1.0 : 2.0;
            const auto c1 = psi.layer(0)[idx];
            const auto c2 = psi.layer(1)[idx];
            const double ke = 0.5 * k2 * colw * norm *
                              (w1 * std::norm(c1) + w2 * std::norm(c2));
            int b = int(std::floor(std::sqrt(k2) / dk + 0.5));
            b = std::clamp(b, 1, B);
            bins[b - 1] += ke;
        }
    }
}

}  // namespace

SpectrumAccumulator::SpectrumAccumulator(const qg::QgParams& p)
    : params_(p), grid_(p.make_grid()) {
    const double dk = std::min(2.0 * M_PI / p.Lx, 2.0 * M_PI / p.Ly);
    acc_.assign(n_bins(*grid_, dk), 0.0);
}

void SpectrumAccumulator::add(const SpectralField& qhat) {
    const double dk = std::min(2.0 * M_PI / params_.Lx, 2.0 * M_PI / params_.Ly);
    accumulate_ke(qhat, params_, acc_, dk);
    ++n_;
}

IsotropicSpectrum SpectrumAccumulator::result() const {
    if (n_ == 0) throw std::invalid_argument("SpectrumAccumulator: no snapshots");
    IsotropicSpectrum s;
    s.dkappa = std::min(2.0 * M_PI / params_.Lx, 2.0 * M_PI / params_.Ly);
    s.kmax = grid_->kmax;
    s.n_snapshots = n_;
    const int B = int(acc_.size());
    s.kappa.resize(B);
    s.E.resize(B);
    for (int b = 0; b < B; ++b) {
        s.kappa[b] = (b + 1) * s.dkappa;
        s.E[b] = acc_[b] / (s.dkappa * n_);
    }
    return s;
}

IsotropicSpectrum kinetic_energy_spectrum(std::span<const LayeredField> states,
                                          const qg::QgParams& p) {
    if (states.empty()) throw std::invalid_argument("kinetic_energy_spectrum: empty input");
    SpectrumAccumulator acc(p);
    const GridPtr g = p.make_grid();
    for (const auto& f : states) acc.add(spectral::forward(f, g));
    return acc.result();
}

double spectrum_error(const IsotropicSpectrum& model, const IsotropicSpectrum& truth) {
    if (!model.same_binning(truth))
        throw std::invalid_argument("spectrum_error: binning mismatch");
    const double kc = (2.0 / 3.0) * model.kmax;
    const int B = int(model.kappa.size());
    // piecewise-constant in kappa: bin b covers [(b+0.5-1)*dk, (b+0.5)*dk)
    // around its center (b+1)*dk; the first half-cell extends down to 0
    double integral = 0.0;
    double covered = 0.0;
    for (int b = 0; b < B && covered < kc; ++b) {
        const double lo = covered;
        const double hi_edge = (b + 1.5) * model.dkappa;
        const double hi = (b == B - 1) ? kc : std::min(kc, hi_edge);
        if (hi <= lo) break;
        if (!(model.E[b] > 0.0) || !(truth.E[b] > 0.0))
            throw std::invalid_argument("spectrum_error: nonpositive bin below cutoff");
        const double lr = std::log(model.E[b] / truth.E[b]);
        integral += lr * lr * (hi - lo);
        covered = hi;
    }
    return integral / kc;
}

std::vector<double> spread_curve(const closure::EnsembleForecast& ens) {
    if (ens.S < 2) throw std::invalid_argument("spread_curve: S must be >= 2");
    std::vector<double> out(ens.w, 0.0);
    const std::size_t D = ens.initial.size();
    std::vector<double> mean(D);
    for (int lead = 1; lead <= ens.w; ++lead) {
        if (!ens.all_ok_at(lead)) {
            out[lead - 1] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        std::fill(mean.begin(), mean.end(), 0.0);
        for (int s = 0; s < ens.S; ++s) {
            const auto& v = ens.traj[s][lead - 1].v;
            for (std::size_t d = 0; d < D; ++d) mean[d] += v[d];
        }
        for (std::size_t d = 0; d < D; ++d) mean[d] /= ens.S;
        double acc = 0.0;
        for (int s = 0; s < ens.S; ++s) {
            const auto& v = ens.traj[s][lead - 1].v;
            for (std::size_t d = 0; d < D; ++d) {
                const double dev = v[d] - mean[d];
                acc += dev * dev;
            }
        }
        out[lead - 1] = std::sqrt(acc / (double(ens.S - 1) * double(D)));
    }
    return out;
}

ScoreCurve score_curve(std::span<const LayeredField> validation,
                       const closure::ClosureParams& p, const qg::QgParams& qp,
                       int horizon, int S, uint64_t seed) {
    const int nw = scoring::n_windows(validation.size(), horizon);
    if (nw < 1) throw std::invalid_argument("score_curve: insufficient validation data");
    const int D = int(validation[0].size());

    std::vector<std::vector<double>> win_scores(nw), win_spread(nw);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int j = 0; j < nw; ++j) {
        const std::size_t base = std::size_t(j) * horizon;
        const uint64_t wseed = mix64(seed, mix64(uint64_t(rng::Stream::WindowSeed), uint64_t(j)));
        const auto ens = closure::rollout_ensemble(validation[base], p, qp, horizon, S, wseed);
        std::vector<double> scores(horizon, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> spreads(horizon, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> flat(std::size_t(S) * D);
        const auto sc = S >= 2 ? spread_curve(ens) : std::vector<double>(horizon, 0.0);
        for (int lead = 1; lead <= horizon; ++lead) {
            if (!ens.all_ok_at(lead)) break;
            const auto& y = validation[base + lead];
            if (S == 1) {
                scores[lead - 1] = scoring::energy_score_deterministic(
                    std::span<const double>(ens.traj[0][lead - 1].v.data(), D),
                    std::span<const double>(y.v.data(), D));
            } else {
                for (int s = 0; s < S; ++s)
                    std::copy(ens.traj[s][lead - 1].v.begin(), ens.traj[s][lead - 1].v.end(),
                              flat.begin() + std::size_t(s) * D);
                scores[lead - 1] =
                    scoring::energy_score(flat, S, D, std::span<const double>(y.v.data(), D));
            }
            spreads[lead - 1] = sc[lead - 1];
        }
        win_scores[j] = std::move(scores);
        win_spread[j] = std::move(spreads);
    }

    ScoreCurve curve;
    curve.n_windows = nw;
    curve.lead_steps.resize(horizon);
    curve.lead_hours.resize(horizon);
    curve.mean_score.assign(horizon, 0.0);
    curve.spread.assign(horizon, 0.0);
    for (int lead = 1; lead <= horizon; ++lead) {
        curve.lead_steps[lead - 1] = lead;
        curve.lead_hours[lead - 1] = lead * qp.dt / 3600.0;
        double acc = 0.0, sacc = 0.0;
        int n = 0;
        for (int j = 0; j < nw; ++j) {
            const double v = win_scores[j][lead - 1];
            if (std::isfinite(v)) {
                acc += v;
                sacc += win_spread[j][lead - 1];
                ++n;
            }
        }
        curve.mean_score[lead - 1] = n > 0 ? acc / n : std::numeric_limits<double>::quiet_NaN();
        curve.spread[lead - 1] = n > 0 ? sacc / n : std::numeric_limits<double>::quiet_NaN();
    }
    return curve;
}

LongRunReport long_run(const LayeredField& x0, const closure::ClosureParams& p,
                       const qg::QgParams& qp, double duration_s, uint64_t seed,
                       int spectrum_stride) {
    if (!(duration_s > 0)) throw std::invalid_argument("long_run: duration must be positive");
    const long nsteps = std::lround(duration_s / qp.dt);
    const long skip = nsteps / 10;  // discard the first 10% as transient

    LongRunReport rep;
    rep.duration = duration_s;
    SpectrumAccumulator acc(qp);
    try {
        closure::ClosedStepper cs(qp, x0, p, seed);
        for (long n = 1; n <= nsteps; ++n) {
            cs.step();
            if (n > skip && (n - skip) % spectrum_stride == 0)
                acc.add(cs.state_spectral());
        }
        rep.survived = true;
        rep.survival_time = nsteps * qp.dt;
        rep.final_state = cs.state();
        if (acc.count() > 0) rep.spectrum = acc.result();
    } catch (const InstabilityError& e) {
        rep.survived = false;
        rep.survival_time = e.time;
    }
    return rep;
}

}  // namespace cgqg::diagnostics
