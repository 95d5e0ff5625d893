#include "cgqg/reference.hpp"

#include <cmath>
#include <stdexcept>

namespace cgqg::ref {

SpectralField forward_naive(const LayeredField& f, const GridPtr& g) {
    if (f.nx != g->nx || f.ny != g->ny)
        throw std::invalid_argument("forward_naive: dimension mismatch");
    SpectralField out(g, f.nl);
    const int nx = g->nx, ny = g->ny, nkx = g->nkx();
    for (int l = 0; l < f.nl; ++l) {
        const double* src = f.layer(l);
        auto* dst = out.layer(l);
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nkx; ++i) {
                std::complex<double> acc(0.0, 0.0);
                for (int y = 0; y < ny; ++y) {
                    for (int x = 0; x < nx; ++x) {
                        const double ph = -2.0 * M_PI *
                                          (double(i) * x / nx + double(j) * y / ny);
                        acc += src[y * nx + x] *
                               std::complex<double>(std::cos(ph), std::sin(ph));
                    }
                }
                dst[j * nkx + i] = acc;
            }
        }
    }
    return out;
}

LayeredField inverse_naive(const SpectralField& f) {
    const Grid& g = *f.grid;
    const int nx = g.nx, ny = g.ny, nkx = g.nkx();
    LayeredField out(f.nl, ny, nx);
    const double norm = 1.0 / (double(nx) * ny);
    for (int l = 0; l < f.nl; ++l) {
        const auto* src = f.layer(l);
        double* dst = out.layer(l);
        for (int y = 0; y < ny; ++y) {
            for (int x = 0; x < nx; ++x) {
                std::complex<double> acc(0.0, 0.0);
                for (int j = 0; j < ny; ++j) {
                    for (int i = 0; i < nx; ++i) {
                        // reconstruct the full plane from the r2c half plane
                        std::complex<double> c;
                        if (i < nkx) {
                            c = src[j * nkx + i];
                        } else {
                            const int jj = (ny - j) % ny;
                            const int ii = nx - i;
                            c = std::conj(src[jj * nkx + ii]);
                        }
                        const double ph = 2.0 * M_PI *
                                          (double(i) * x / nx + double(j) * y / ny);
                        acc += c * std::complex<double>(std::cos(ph), std::sin(ph));
                    }
                }
                dst[y * nx + x] = acc.real() * norm;
            }
        }
    }
    return out;
}

double energy_score_direct(std::span<const double> members, int S, int D,
                           std::span<const double> y) {
    if (S < 2) throw std::invalid_argument("energy_score_direct: S must be >= 2");
    if (members.size() != std::size_t(S) * D || y.size() != std::size_t(D))
        throw std::invalid_argument("energy_score_direct: dimension mismatch");

    auto dist = [&](const double* a, const double* b) {
        double s = 0.0;
        for (int d = 0; d < D; ++d) {
            const double diff = a[d] - b[d];
            s += diff * diff;
        }
        return std::sqrt(s);
    };

    double term1 = 0.0;
    for (int s = 0; s < S; ++s) term1 += dist(members.data() + std::size_t(s) * D, y.data());
    double term2 = 0.0;
    for (int s = 0; s < S; ++s)
        for (int t = 0; t < S; ++t)
            term2 += dist(members.data() + std::size_t(s) * D,
                          members.data() + std::size_t(t) * D);

    return term1 / S - term2 / (2.0 * S * (S - 1.0));
}

}  // namespace cgqg::ref
