#pragma once

#include <span>

#include "cgqg/field.hpp"

namespace cgqg::ref {

// Serial reference implementations of the hot kernels, kept alongside the
// production paths for testing and for the benchmark target. These are
// deliberately direct: the naive DFT is the O(N^4) definition with the same
// storage and normalization conventions as spectral::forward/inverse.

SpectralField forward_naive(const LayeredField& f, const GridPtr& g);
LayeredField inverse_naive(const SpectralField& f);

// Direct two-loop evaluation of the ensemble energy-score estimator,
// members row-major (S x D).
double energy_score_direct(std::span<const double> members, int S, int D,
                           std::span<const double> y);

}  // namespace cgqg::ref
