#pragma once

#include <cmath>
#include <span>

#include "cgqg/field.hpp"
#include "cgqg/rng.hpp"

namespace cgqg::test {

inline LayeredField random_field(const GridPtr& g, uint64_t seed, double amp = 1.0,
                                 int nl = 2) {
    LayeredField f(nl, g->ny, g->nx);
    rng::CounterStream s(seed, rng::Stream::MonteCarlo);
    s.fill_gaussian(std::span<double>(f.v.data(), f.v.size()));
    for (double& v : f.v) v *= amp;
    return f;
}

// Band-limited random field: spectral support kept below frac * kmax.
LayeredField random_band_limited(const GridPtr& g, uint64_t seed, double frac,
                                 double amp = 1.0);

inline double rel_rms_diff(const LayeredField& a, const LayeredField& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        const double d = a.v[i] - b.v[i];
        num += d * d;
        den += b.v[i] * b.v[i];
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace cgqg::test
