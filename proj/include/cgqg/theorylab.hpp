#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cgqg/calibrate.hpp"
#include "cgqg/rng.hpp"

namespace cgqg::theorylab {

enum class NoiseShape { Gaussian, SkewedMixture };

// Scalar AR(1) system x_{n+1} = a x_n + eta_n with |a| < 1. The skewed noise
// is a centered two-component Gaussian mixture rescaled to std sigma, giving
// an invariant measure whose median differs from its mean.
struct Ar1System {
    double a = 0.9;
    double sigma = 1.0;
    NoiseShape shape = NoiseShape::Gaussian;

    double invariant_var() const { return sigma * sigma / (1.0 - a * a); }
    double noise(const rng::CounterStream& s, uint64_t i) const;
    // advances one step; draw index i must be unique per step
    double step(double x, const rng::CounterStream& s, uint64_t i) const {
        return a * x + noise(s, i);
    }
    std::vector<double> simulate(double x0, std::size_t n, uint64_t seed,
                                 uint64_t stream_id = 0) const;
};

// Two-parameter model x_{n+1} = theta1 x_n + theta2 xi_n; theta2 = 0 is the
// deterministic submanifold.
struct Ar1Model {
    double theta1 = 0.0;
    double theta2 = 0.0;
    bool stable() const { return std::abs(theta1) < 1.0; }
};

// Closed-form m-step conditional law of the Gaussian AR(1): mean a^m x0,
// variance sigma^2 (1 - a^(2m)) / (1 - a^2).
std::pair<double, double> ar1_conditional_law(const Ar1System& sys, double x0, int m);

// Exact window MSE objective: bias + model predictive variance + target
// uncertainty, summed over leads 1..w, averaged over the stationary initial
// condition.
double window_mse_objective(const Ar1Model& model, const Ar1System& sys, int w);

// Monte Carlo expected per-window energy score of the model against the true
// system; the Gaussian per-lead predictive law is scored by the closed-form
// CRPS (variance-reduced).
double window_score_objective(const Ar1Model& model, const Ar1System& sys, int w,
                              int mc_samples, uint64_t seed);

// Squared and Euclidean are the pointwise losses of the degeneracy results;
// Score is the ensemble energy score.
enum class LossId { Squared, Euclidean, Score };

// Climatological risk R(c) = E_{y~invariant}[loss(c, y)] by Monte Carlo over
// a long stationary trajectory, and its minimizer by golden-section search.
// Pointwise losses only (Squared, Euclidean).
double climatological_risk(LossId loss, double c, const Ar1System& sys, std::size_t mc,
                           uint64_t seed);
double risk_minimizer(LossId loss, const Ar1System& sys, std::size_t mc, uint64_t seed,
                      double lo, double hi);

struct Sampler {
    std::function<double(uint64_t seed, uint64_t i)> draw;
};

Sampler gaussian_sampler(double mu, double sigma);

struct DivergenceEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
    int n = 0;
};

// d_S(P,Q) = E_{y~Q}[S(P,y)] - E_{y~Q}[S(Q,y)] estimated with the unbiased
// ensemble estimator (ensemble size S per term) and shared y draws.
DivergenceEstimate divergence_estimator(const Sampler& P, const Sampler& Q, int mc,
                                        int ensemble, uint64_t seed);

// Closed-form divergence induced by the energy score between two Gaussians.
double gaussian_energy_divergence(double mu_p, double sp, double mu_q, double sq);

// Empirical 1-D 2-Wasserstein distance via sorted-sample quantile coupling.
double wasserstein2_sorted(std::vector<double> xs, std::vector<double> ys);

struct CollapseReport {
    int w = 0;
    LossId loss = LossId::Euclidean;
    double theta1 = 0.0, theta2 = 0.0;  // fitted (noise gain reported as |theta2|)
    double long_lead_spread = 0.0;      // model ensemble spread at long lead
    double w2_to_invariant = 0.0;       // long-run empirical law vs invariant law
    double final_loss = 0.0;
};

struct CollapseConfig {
    std::size_t series_len = 400000;
    int S = 4;             // ensemble size for the energy score
    int batch = 16;        // windows per candidate evaluation
    int eval_batch = 512;  // windows for the best-seen tracking evaluation
    calibrate::EsConfig es_warm;  // offline (w=1) warm-start phase
    calibrate::EsConfig es;       // main phase at the requested window
    int long_lead = 200;
    std::size_t longrun_n = 100000;

    CollapseConfig();
};

// Trains the AR(1) model under the given loss and window length with
// es_optimize and reports fitted parameters, long-lead spread and the
// distance of the long-run law to the invariant measure.
CollapseReport collapse_experiment(const Ar1System& sys, LossId loss, int w,
                                   const CollapseConfig& cfg, uint64_t seed);

// Scalar online loss used by the collapse experiment (exposed for tests):
// energy-score estimator over S members for Score, |x - y| single-member for
// Euclidean, squared error for Squared.
double ar1_window_loss(const Ar1Model& model, std::span<const double> series, int w, int S,
                       LossId loss, std::span<const int> windows, uint64_t seed);

}  // namespace cgqg::theorylab
