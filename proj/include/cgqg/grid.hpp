#pragma once

#include <memory>
#include <vector>

namespace cgqg {

// Doubly periodic rectangular grid with FFT wavenumber bookkeeping and the
// precomputed diagonal spectral multipliers used throughout the solver.
// Spectral storage is real-to-complex: nkx = nx/2 + 1 retained kx columns.
struct Grid {
    int nx = 0, ny = 0;
    double Lx = 0.0, Ly = 0.0;

    std::vector<double> kx;  // size nkx, kx[i] = 2*pi*i/Lx (rad/m)
    std::vector<double> ky;  // size ny, FFT ordering, zero mode at index 0
    double kmax = 0.0;       // largest resolved isotropic wavenumber

    // Multiplier tables over (ky-index, kx-index), size ny*nkx.
    std::vector<double> kappa2;    // kx^2 + ky^2
    std::vector<double> ssd;       // one-step scale-selective dissipation filter
    std::vector<double> dealias;   // Fourier smoothing dealias filter
    std::vector<double> highpass;  // kappa^2 / kmax^2

    Grid(int nx_, int ny_, double Lx_, double Ly_);

    int nkx() const { return nx / 2 + 1; }
    int spectral_size() const { return ny * nkx(); }
    double cell_area() const { return (Lx / nx) * (Ly / ny); }
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(int nx, int ny, double Lx, double Ly);

// Filter profiles as functions of isotropic wavenumber; the tables above are
// these evaluated per mode. Exposed for direct verification.
double ssd_multiplier(double kappa, double kmax);
double dealias_multiplier(double kappa, double kmax);

inline constexpr double kSsdCutoffFraction = 0.65;
inline constexpr double kSsdAlpha = 23.6;

}  // namespace cgqg
