#pragma once

#include <complex>
#include <cstddef>

#include "cgqg/common.hpp"
#include "cgqg/grid.hpp"

namespace cgqg {

// Two-layer (or generally nl-layer) real field on a periodic grid,
// layer-major [layer][y][x]. Units are whatever the context gives it;
// for QG states this is PV anomaly (1/s).
struct LayeredField {
    int nl = 0, ny = 0, nx = 0;
    double time = 0.0;
    avec<double> v;

    LayeredField() = default;
    LayeredField(int nl_, int ny_, int nx_)
        : nl(nl_), ny(ny_), nx(nx_), v(std::size_t(nl_) * ny_ * nx_, 0.0) {}

    std::size_t layer_size() const { return std::size_t(ny) * nx; }
    std::size_t size() const { return v.size(); }
    double* layer(int l) { return v.data() + std::size_t(l) * layer_size(); }
    const double* layer(int l) const { return v.data() + std::size_t(l) * layer_size(); }
    double& at(int l, int j, int i) { return v[(std::size_t(l) * ny + j) * nx + i]; }
    double at(int l, int j, int i) const { return v[(std::size_t(l) * ny + j) * nx + i]; }

    bool same_shape(const LayeredField& o) const {
        return nl == o.nl && ny == o.ny && nx == o.nx;
    }

    double rms() const;
    double max_abs() const;
    bool finite() const;
};

// Spectral counterpart in r2c layout, [layer][ky][kx<=nx/2]. Hermitian
// symmetry of the full plane is implicit in the storage.
struct SpectralField {
    GridPtr grid;
    int nl = 0;
    avec<std::complex<double>> c;

    SpectralField() = default;
    SpectralField(GridPtr g, int nl_)
        : grid(std::move(g)), nl(nl_), c(std::size_t(nl_) * grid->spectral_size()) {}

    std::size_t layer_size() const { return std::size_t(grid->spectral_size()); }
    std::complex<double>* layer(int l) { return c.data() + std::size_t(l) * layer_size(); }
    const std::complex<double>* layer(int l) const {
        return c.data() + std::size_t(l) * layer_size();
    }
    std::complex<double>& at(int l, int j, int i) {
        return c[(std::size_t(l) * grid->ny + j) * grid->nkx() + i];
    }
    std::complex<double> at(int l, int j, int i) const {
        return c[(std::size_t(l) * grid->ny + j) * grid->nkx() + i];
    }
};

// y += a*x, shapes must match
void axpy(double a, const LayeredField& x, LayeredField& y);
void axpy(std::complex<double> a, const SpectralField& x, SpectralField& y);

}  // namespace cgqg
