#pragma once

#include <span>
#include <vector>

#include "cgqg/closure.hpp"

namespace cgqg::scoring {

// Unbiased ensemble energy-score estimator,
//   (1/S) sum_s ||y_s - y|| - (1/(2S(S-1))) sum_{s,s'} ||y_s - y_s'||,
// members row-major (S x D). Nonnegative and exchangeable in the members.
double energy_score(std::span<const double> members, int S, int D,
                    std::span<const double> y);

// Convenience overload for a set of equally-shaped member vectors.
double energy_score(const std::vector<std::span<const double>>& members,
                    std::span<const double> y);

// Deterministic (S=1) reduction: plain Euclidean distance.
double energy_score_deterministic(std::span<const double> yhat, std::span<const double> y);

// Closed-form CRPS of a Gaussian forecast N(mu, sigma^2) against observation
// y; in one dimension the energy score equals the CRPS, so this is the
// independent oracle for the estimator.
double gaussian_crps_oracle(double mu, double sigma, double y);

// E|X - Y| for X ~ N(mu_x, sx^2), Y ~ N(mu_y, sy^2) independent. Building
// block for closed-form expected scores and divergences between Gaussians.
double expected_abs_gaussian_diff(double mu_x, double sx, double mu_y, double sy);

// Expected energy score E_{y~N(mu_t,st^2)}[S(N(mu_f,sf^2), y)], closed form.
double expected_gaussian_energy_score(double mu_f, double sf, double mu_t, double st);

struct LossConfig {
    int w = 1;                           // window length in coarse steps
    int S = 2;                           // ensemble size; S=1 -> deterministic reduction
    double instability_penalty = 1e3;    // multiple of the median finite window score
};

struct OnlineLossResult {
    double loss = 0.0;
    int n_windows = 0;
    int n_unstable = 0;
};

// Trajectory-based online loss: the series is split into disjoint windows of
// length w; each window initializes all members at the observed state, rolls
// the closed model out and scores every lead. The result is normalized by the
// number of scored (window, lead) pairs. Windows that go unstable mid-rollout
// contribute the configured penalty (a multiple of the median finite window
// score). window_subset selects a mini-batch of window indices; empty = all.
OnlineLossResult online_loss(std::span<const LayeredField> series,
                             const closure::ClosureParams& p, const LossConfig& cfg,
                             const qg::QgParams& qp, uint64_t seed,
                             std::span<const int> window_subset = {});

int n_windows(std::size_t series_len, int w);

}  // namespace cgqg::scoring
