#include "cgqg/theorylab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cgqg/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cgqg::theorylab {

namespace {

// centered two-component mixture before rescaling: heavy left lobe, light
// far right lobe; the invariant law of the driven AR(1) inherits the skew
constexpr double kMixW1 = 0.8, kMixMu1 = -0.5, kMixS1 = 0.6;
constexpr double kMixW2 = 0.2, kMixMu2 = 2.0, kMixS2 = 0.8;

double mixture_std() {
    const double var = kMixW1 * (kMixMu1 * kMixMu1 + kMixS1 * kMixS1) +
                       kMixW2 * (kMixMu2 * kMixMu2 + kMixS2 * kMixS2);
    return std::sqrt(var);
}

}  // namespace

double Ar1System::noise(const rng::CounterStream& s, uint64_t i) const {
    if (shape == NoiseShape::Gaussian) return sigma * s.gaussian(2 * i);
    const double u = s.uniform(2 * i + 1);
    const double z = s.gaussian(2 * i);
    const double scale = sigma / mixture_std();
    return scale * (u < kMixW1 ? kMixMu1 + kMixS1 * z : kMixMu2 + kMixS2 * z);
}

std::vector<double> Ar1System::simulate(double x0, std::size_t n, uint64_t seed,
                                        uint64_t stream_id) const {
    rng::CounterStream s(seed, rng::Stream::Ar1Noise, stream_id);
    std::vector<double> out(n);
    double x = x0;
    for (std::size_t i = 0; i < n; ++i) {
        x = step(x, s, i);
        out[i] = x;
    }
    return out;
}

std::pair<double, double> ar1_conditional_law(const Ar1System& sys, double x0, int m) {
    if (m < 1) throw std::invalid_argument("ar1_conditional_law: lead must be >= 1");
    const double am = std::pow(sys.a, m);
    const double var = sys.sigma * sys.sigma * (1.0 - std::pow(sys.a, 2 * m)) /
                       (1.0 - sys.a * sys.a);
    return {am * x0, var};
}

double window_mse_objective(const Ar1Model& model, const Ar1System& sys, int w) {
    if (!model.stable()) throw std::invalid_argument("window_mse_objective: |theta1| must be < 1");
    const double var_inv = sys.invariant_var();
    double total = 0.0;
    for (int m = 1; m <= w; ++m) {
        const double bias = std::pow(model.theta1, m) - std::pow(sys.a, m);
        const double model_var = model.theta2 * model.theta2 *
                                 (1.0 - std::pow(model.theta1, 2 * m)) /
                                 (1.0 - model.theta1 * model.theta1);
        const double target_var = sys.sigma * sys.sigma *
                                  (1.0 - std::pow(sys.a, 2 * m)) / (1.0 - sys.a * sys.a);
        total += bias * bias * var_inv + model_var + target_var;
    }
    return total;
}

double window_score_objective(const Ar1Model& model, const Ar1System& sys, int w,
                              int mc_samples, uint64_t seed) {
    const double inv_std = std::sqrt(sys.invariant_var());
    const int chunks = 64;
    std::vector<double> partial(chunks, 0.0);
    const int per = (mc_samples + chunks - 1) / chunks;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int c = 0; c < chunks; ++c) {
        rng::CounterStream s(seed, rng::Stream::MonteCarlo, uint64_t(c));
        double acc = 0.0;
        const int lo = c * per, hi = std::min(mc_samples, (c + 1) * per);
        for (int r = lo; r < hi; ++r) {
            const uint64_t base = uint64_t(r - lo) * (w + 1);
            const double x0 = inv_std * s.gaussian(2 * base);
            // one realized true trajectory; predictive law scored in closed form
            double y = x0;
            for (int m = 1; m <= w; ++m) {
                y = sys.step(y, s, base + m);
                const auto [mu_m, var_m] = [&] {
                    const double t1m = std::pow(model.theta1, m);
                    const double v = model.theta2 * model.theta2 *
                                     (1.0 - std::pow(model.theta1, 2 * m)) /
                                     (1.0 - model.theta1 * model.theta1);
                    return std::pair<double, double>(t1m * x0, v);
                }();
                const double sd = std::sqrt(std::max(var_m, 0.0));
                acc += sd > 1e-12 ? scoring::gaussian_crps_oracle(mu_m, sd, y)
                                  : std::abs(y - mu_m);
            }
        }
        partial[c] = acc;
    }
    double total = 0.0;
    for (int c = 0; c < chunks; ++c) total += partial[c];
    return total / double(mc_samples);
}

double climatological_risk(LossId loss, double c, const Ar1System& sys, std::size_t mc,
                           uint64_t seed) {
    if (loss == LossId::Score)
        throw std::invalid_argument("climatological_risk: pointwise losses only");
    const auto ys = sys.simulate(0.0, mc, seed);
    double acc = 0.0;
    for (double y : ys) acc += loss == LossId::Squared ? (c - y) * (c - y) : std::abs(c - y);
    return acc / double(mc);
}

double risk_minimizer(LossId loss, const Ar1System& sys, std::size_t mc, uint64_t seed,
                      double lo, double hi) {
    if (loss == LossId::Score)
        throw std::invalid_argument("risk_minimizer: pointwise losses only");
    // golden-section on the fixed Monte Carlo sample; the sampled risk is
    // convex in c for both losses
    const auto ys = sys.simulate(0.0, mc, seed);
    auto risk = [&](double c) {
        double acc = 0.0;
        for (double y : ys) acc += loss == LossId::Squared ? (c - y) * (c - y) : std::abs(c - y);
        return acc / double(mc);
    };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = risk(x1), f2 = risk(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-7; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = risk(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = risk(x2);
        }
    }
    return 0.5 * (a + b);
}

Sampler gaussian_sampler(double mu, double sigma) {
    return Sampler{[mu, sigma](uint64_t seed, uint64_t i) {
        rng::CounterStream s(seed, rng::Stream::MonteCarlo);
        return mu + sigma * s.gaussian(i);
    }};
}

DivergenceEstimate divergence_estimator(const Sampler& P, const Sampler& Q, int mc,
                                        int ensemble, uint64_t seed) {
    if (ensemble < 2) throw std::invalid_argument("divergence_estimator: ensemble must be >= 2");
    const uint64_t seed_y = mix64(seed, 1), seed_p = mix64(seed, 2), seed_q = mix64(seed, 3);
    const int chunks = 64;
    std::vector<double> psum(chunks, 0.0), psum2(chunks, 0.0);
    const int per = (mc + chunks - 1) / chunks;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (int c = 0; c < chunks; ++c) {
        double acc = 0.0, acc2 = 0.0;
        std::vector<double> ens_p(ensemble), ens_q(ensemble);
        const int lo = c * per, hi = std::min(mc, (c + 1) * per);
        for (int r = lo; r < hi; ++r) {
            const uint64_t base = uint64_t(r) * ensemble;
            const double y = Q.draw(seed_y, uint64_t(r));
            for (int s = 0; s < ensemble; ++s) {
                ens_p[s] = P.draw(seed_p, base + s);
                ens_q[s] = Q.draw(seed_q, base + s);
            }
            const double sp = scoring::energy_score(ens_p, ensemble, 1, std::span(&y, 1));
            const double sq = scoring::energy_score(ens_q, ensemble, 1, std::span(&y, 1));
            const double d = sp - sq;
            acc += d;
            acc2 += d * d;
        }
        psum[c] = acc;
        psum2[c] = acc2;
    }
    double sum = 0.0, sum2 = 0.0;
    for (int c = 0; c < chunks; ++c) {
        sum += psum[c];
        sum2 += psum2[c];
    }
    DivergenceEstimate out;
    out.n = mc;
    out.value = sum / mc;
    const double var = std::max(0.0, sum2 / mc - out.value * out.value);
    out.stderr_ = std::sqrt(var / mc);
    return out;
}

double gaussian_energy_divergence(double mu_p, double sp, double mu_q, double sq) {
    const double cross = scoring::expected_abs_gaussian_diff(mu_p, sp, mu_q, sq);
    const double pp = scoring::expected_abs_gaussian_diff(mu_p, sp, mu_p, sp);
    const double qq = scoring::expected_abs_gaussian_diff(mu_q, sq, mu_q, sq);
    return cross - 0.5 * pp - 0.5 * qq;
}

double wasserstein2_sorted(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.empty())
        throw std::invalid_argument("wasserstein2_sorted: need equal nonempty samples");
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - ys[i];
        acc += d * d;
    }
    return std::sqrt(acc / double(xs.size()));
}

double ar1_window_loss(const Ar1Model& model, std::span<const double> series, int w, int S,
                       LossId loss, std::span<const int> windows, uint64_t seed) {
    if (S < 1) throw std::invalid_argument("ar1_window_loss: S must be >= 1");
    double total = 0.0;
    std::vector<double> members(S);
    std::vector<double> state(S);
    for (int j : windows) {
        const std::size_t base = std::size_t(j) * w;
        rng::CounterStream noise(mix64(seed, uint64_t(j)), rng::Stream::ClosureNoise);
        for (int s = 0; s < S; ++s) state[s] = series[base];
        double acc = 0.0;
        for (int lead = 1; lead <= w; ++lead) {
            for (int s = 0; s < S; ++s) {
                const double xi = noise.gaussian(uint64_t(lead - 1) * S + s);
                state[s] = model.theta1 * state[s] + model.theta2 * xi;
            }
            const double y = series[base + lead];
            double sc;
            if (loss == LossId::Squared) {
                sc = (state[0] - y) * (state[0] - y);
            } else if (S == 1) {
                sc = std::abs(state[0] - y);
            } else {
                members.assign(state.begin(), state.end());
                sc = scoring::energy_score(members, S, 1, std::span(&y, 1));
            }
            acc += sc;
        }
        total += acc / w;
    }
    return windows.empty() ? 0.0 : total / double(windows.size());
}

CollapseConfig::CollapseConfig() {
    es_warm.population = 32;
    es_warm.iters = 600;
    es_warm.sigma0 = 0.1;
    es_warm.sigma_decay = 0.995;
    es_warm.sigma_min = 2e-3;
    es_warm.lr0 = 0.15;
    es_warm.lr_decay = 0.997;
    es_warm.lr_min = 2e-3;

    es.population = 32;
    es.iters = 2200;
    es.sigma0 = 0.03;
    es.sigma_decay = 0.9975;
    es.sigma_min = 8e-5;
    es.lr0 = 0.05;
    es.lr_decay = 0.998;
    es.lr_min = 4e-4;
}

CollapseReport collapse_experiment(const Ar1System& sys, LossId loss, int w,
                                   const CollapseConfig& cfg, uint64_t seed) {
    // training series from one long stationary run (burn-in dropped)
    const std::size_t burn = 1000;
    auto series_full = sys.simulate(0.0, cfg.series_len + burn, mix64(seed, 0xDA7A));
    std::vector<double> series(series_full.begin() + burn, series_full.end());
    const int S = loss == LossId::Score ? cfg.S : 1;

    auto make_obj = [&](int window, int batch) {
        const int total_windows = int((series.size() - 1) / std::size_t(window));
        return calibrate::Objective(
            [&series, window, batch, total_windows, S, loss](std::span<const double> theta,
                                                             uint64_t key) {
                Ar1Model m{theta[0], theta[1]};
                if (!m.stable() || !std::isfinite(theta[0]) || !std::isfinite(theta[1]))
                    return calibrate::ObjectiveValue{1e12, 1, 1};
                const auto b = calibrate::sample_without_replacement(total_windows, batch,
                                                                     mix64(key, 0xB));
                const double l =
                    ar1_window_loss(m, series, window, S, loss, b, mix64(key, 0x5));
                return calibrate::ObjectiveValue{l, int(b.size()), 0};
            });
    };

    // window-length curriculum: an offline (w=1) phase fixes the short-lead
    // conditioning, then the long-window phase calibrates the full objective
    std::vector<double> theta{0.5, 0.1};
    {
        const auto obj1 = make_obj(1, cfg.batch * 16);
        const auto eval1 = make_obj(1, 2048);
        theta = calibrate::es_optimize(obj1, theta, cfg.es_warm, mix64(seed, 0xE4), &eval1)
                    .best_theta;
    }
    const auto obj = make_obj(w, cfg.batch);
    const auto eval = make_obj(w, cfg.eval_batch);
    auto res = calibrate::es_optimize(obj, theta, cfg.es, mix64(seed, 0xE5), &eval);

    CollapseReport rep;
    rep.w = w;
    rep.loss = loss;
    rep.theta1 = res.best_theta[0];
    rep.theta2 = std::abs(res.best_theta[1]);  // noise gain sign is irrelevant
    rep.final_loss = res.best_loss;

    const Ar1Model fitted{rep.theta1, rep.theta2};
    if (fitted.stable()) {
        const double t2m = std::pow(fitted.theta1, 2 * cfg.long_lead);
        rep.long_lead_spread = rep.theta2 * std::sqrt((1.0 - t2m) /
                                                      (1.0 - fitted.theta1 * fitted.theta1));
        // long-run empirical law of the fitted model vs the exact invariant law
        Ar1System model_as_system{fitted.theta1, rep.theta2, NoiseShape::Gaussian};
        auto run = model_as_system.simulate(0.0, cfg.longrun_n + burn, mix64(seed, 0x10));
        std::vector<double> model_samples(run.begin() + burn, run.end());
        const double inv_std = std::sqrt(sys.invariant_var());
        rng::CounterStream ref(mix64(seed, 0x11), rng::Stream::MonteCarlo);
        std::vector<double> exact(cfg.longrun_n);
        for (std::size_t i = 0; i < exact.size(); ++i) exact[i] = inv_std * ref.gaussian(i);
        rep.w2_to_invariant = wasserstein2_sorted(std::move(model_samples), std::move(exact));
    } else {
        rep.long_lead_spread = std::numeric_limits<double>::infinity();
        rep.w2_to_invariant = std::numeric_limits<double>::infinity();
    }
    return rep;
}

}  // namespace cgqg::theorylab
