#include "cgqg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cgqg/common.hpp"
#include "cgqg/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cgqg::scoring {

namespace {

inline double dist(const double* a, const double* b, int D) {
    double s = 0.0;
    for (int d = 0; d < D; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return std::sqrt(s);
}

}  // namespace

double energy_score(std::span<const double> members, int S, int D,
                    std::span<const double> y) {
    if (S < 2) throw std::invalid_argument("energy_score: S must be >= 2");
    if (members.size() != std::size_t(S) * D || y.size() != std::size_t(D))
        throw std::invalid_argument("energy_score: dimension mismatch");

    // small ensembles: direct serial evaluation, no temporaries
    if (std::size_t(S) * D <= 16384) {
        double term1 = 0.0, term2 = 0.0;
        for (int s = 0; s < S; ++s) {
            const double* ms = members.data() + std::size_t(s) * D;
            term1 += dist(ms, y.data(), D);
            for (int t = s + 1; t < S; ++t)
                term2 += dist(ms, members.data() + std::size_t(t) * D, D);
        }
        return term1 / S - term2 / (double(S) * (S - 1.0));
    }

    // per-member partials computed independently, then reduced in fixed order
    std::vector<double> obs_term(S), pair_term(S, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int s = 0; s < S; ++s) {
        const double* ms = members.data() + std::size_t(s) * D;
        obs_term[s] = dist(ms, y.data(), D);
        double acc = 0.0;
        for (int t = s + 1; t < S; ++t)
            acc += dist(ms, members.data() + std::size_t(t) * D, D);
        pair_term[s] = acc;
    }
    double term1 = 0.0, term2 = 0.0;
    for (int s = 0; s < S; ++s) {
        term1 += obs_term[s];
        term2 += pair_term[s];
    }
    return term1 / S - term2 / (double(S) * (S - 1.0));
}

double energy_score(const std::vector<std::span<const double>>& members,
                    std::span<const double> y) {
    const int S = int(members.size());
    if (S < 2) throw std::invalid_argument("energy_score: S must be >= 2");
    const int D = int(y.size());
    std::vector<double> flat(std::size_t(S) * D);
    for (int s = 0; s < S; ++s) {
        if (members[s].size() != std::size_t(D))
            throw std::invalid_argument("energy_score: dimension mismatch");
        std::copy(members[s].begin(), members[s].end(), flat.begin() + std::size_t(s) * D);
    }
    return energy_score(flat, S, D, y);
}

double energy_score_deterministic(std::span<const double> yhat, std::span<const double> y) {
    if (yhat.size() != y.size())
        throw std::invalid_argument("energy_score_deterministic: dimension mismatch");
    return dist(yhat.data(), y.data(), int(y.size()));
}

double gaussian_crps_oracle(double mu, double sigma, double y) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_crps_oracle: sigma must be > 0");
    const double z = (y - mu) / sigma;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(M_PI));
}

double expected_abs_gaussian_diff(double mu_x, double sx, double mu_y, double sy) {
    const double m = mu_x - mu_y;
    const double s = std::sqrt(sx * sx + sy * sy);
    if (s == 0.0) return std::abs(m);
    const double lam = m / s;
    return s * std::sqrt(2.0 / M_PI) * std::exp(-0.5 * lam * lam) +
           m * std::erf(lam / std::sqrt(2.0));
}

double expected_gaussian_energy_score(double mu_f, double sf, double mu_t, double st) {
    return expected_abs_gaussian_diff(mu_f, sf, mu_t, st) -
           0.5 * expected_abs_gaussian_diff(mu_f, sf, mu_f, sf);
}

int n_windows(std::size_t series_len, int w) {
    if (series_len == 0) return 0;
    return int((series_len - 1) / std::size_t(w));
}

OnlineLossResult online_loss(std::span<const LayeredField> series,
                             const closure::ClosureParams& p, const LossConfig& cfg,
                             const qg::QgParams& qp, uint64_t seed,
                             std::span<const int> window_subset) {
    if (cfg.w < 1) throw std::invalid_argument("online_loss: window length must be >= 1");
    if (cfg.S < 1) throw std::invalid_argument("online_loss: S must be >= 1");
    if (series.size() < std::size_t(cfg.w) + 1)
        throw std::invalid_argument("online_loss: series too short for the window length");

    const int total = n_windows(series.size(), cfg.w);
    std::vector<int> windows;
    if (window_subset.empty()) {
        windows.resize(total);
        for (int j = 0; j < total; ++j) windows[j] = j;
    } else {
        windows.assign(window_subset.begin(), window_subset.end());
        for (int j : windows)
            if (j < 0 || j >= total)
                throw std::invalid_argument("online_loss: window index out of range");
    }

    const int nw = int(windows.size());
    std::vector<double> window_score(nw, 0.0);
    std::vector<char> window_ok(nw, 1);
    const int D = int(series[0].size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int k = 0; k < nw; ++k) {
        const int j = windows[k];
        const std::size_t base = std::size_t(j) * cfg.w;
        const uint64_t window_seed =
            mix64(seed, mix64(uint64_t(rng::Stream::WindowSeed), uint64_t(j)));
        const auto ens =
            closure::rollout_ensemble(series[base], p, qp, cfg.w, cfg.S, window_seed);

        double acc = 0.0;
        bool ok = true;
        std::vector<double> flat(std::size_t(cfg.S) * D);
        for (int lead = 1; lead <= cfg.w && ok; ++lead) {
            if (!ens.all_ok_at(lead)) {
                ok = false;
                break;
            }
            const auto& y = series[base + lead];
            if (cfg.S == 1) {
                acc += energy_score_deterministic(
                    std::span<const double>(ens.traj[0][lead - 1].v.data(), D),
                    std::span<const double>(y.v.data(), D));
            } else {
                for (int s = 0; s < cfg.S; ++s)
                    std::copy(ens.traj[s][lead - 1].v.begin(), ens.traj[s][lead - 1].v.end(),
                              flat.begin() + std::size_t(s) * D);
                acc += energy_score(flat, cfg.S, D,
                                    std::span<const double>(y.v.data(), D));
            }
        }
        window_ok[k] = ok ? 1 : 0;
        window_score[k] = ok ? acc / cfg.w : 0.0;
    }

    // fixed-order reduction; unstable windows contribute a penalty pinned to
    // the median finite window score
    std::vector<double> finite;
    finite.reserve(nw);
    for (int k = 0; k < nw; ++k)
        if (window_ok[k]) finite.push_back(window_score[k]);

    OnlineLossResult res;
    res.n_windows = nw;
    res.n_unstable = nw - int(finite.size());
    double penalty = 0.0;
    if (!finite.empty()) {
        std::vector<double> sorted = finite;
        std::sort(sorted.begin(), sorted.end());
        const double median = sorted[sorted.size() / 2];
        penalty = cfg.instability_penalty * std::max(median, 1e-300);
    } else {
        penalty = std::numeric_limits<double>::max() / (16.0 * std::max(nw, 1));
    }
    double sum = 0.0;
    for (int k = 0; k < nw; ++k) sum += window_ok[k] ? window_score[k] : penalty;
    res.loss = nw > 0 ? sum / nw : 0.0;
    return res;
}

}  // namespace cgqg::scoring
