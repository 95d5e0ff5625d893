#include "cgqg/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace cgqg {

double ssd_multiplier(double kappa, double kmax) {
    const double kcut = kSsdCutoffFraction * kmax;
    if (kappa <= kcut) return 1.0;
    const double r = (kappa - kcut) / (kmax - kcut);
    return std::exp(-kSsdAlpha * r * r * r * r);
}

double dealias_multiplier(double kappa, double kmax) {
    const double r = kappa / kmax;
    return std::exp(-36.0 * std::pow(r, 36.0));
}

Grid::Grid(int nx_, int ny_, double Lx_, double Ly_) : nx(nx_), ny(ny_), Lx(Lx_), Ly(Ly_) {
    if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0)
        throw std::invalid_argument("Grid: nx, ny must be even and >= 8");
    if (!(Lx > 0.0) || !(Ly > 0.0))
        throw std::invalid_argument("Grid: domain extents must be positive");

    const double dkx = 2.0 * M_PI / Lx;
    const double dky = 2.0 * M_PI / Ly;

    kx.resize(nkx());
    for (int i = 0; i < nkx(); ++i) kx[i] = dkx * i;
    ky.resize(ny);
    for (int j = 0; j < ny; ++j) ky[j] = dky * (j <= ny / 2 ? j : j - ny);

    const double kx_nyq = dkx * (nx / 2);
    const double ky_nyq = dky * (ny / 2);
    kmax = std::sqrt(kx_nyq * kx_nyq + ky_nyq * ky_nyq);

    const int n = spectral_size();
    kappa2.resize(n);
    ssd.resize(n);
    dealias.resize(n);
    highpass.resize(n);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nkx(); ++i) {
            const int idx = j * nkx() + i;
            const double k2 = kx[i] * kx[i] + ky[j] * ky[j];
            const double kappa = std::sqrt(k2);
            kappa2[idx] = k2;
            ssd[idx] = ssd_multiplier(kappa, kmax);
            dealias[idx] = dealias_multiplier(kappa, kmax);
            highpass[idx] = k2 / (kmax * kmax);
        }
    }
}

GridPtr make_grid(int nx, int ny, double Lx, double Ly) {
    return std::make_shared<const Grid>(nx, ny, Lx, Ly);
}

}  // namespace cgqg
