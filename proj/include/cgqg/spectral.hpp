#pragma once

#include "cgqg/field.hpp"

namespace cgqg::spectral {

// Forward transform is unnormalized; the inverse carries 1/(nx*ny). The
// Parseval and round-trip tests pin this convention down.
SpectralField forward(const LayeredField& f, const GridPtr& g);
LayeredField inverse(const SpectralField& f);

// buffer-reusing variants for the stepping hot path
void forward_into(const LayeredField& f, const GridPtr& g, SpectralField& out);
void inverse_into(const SpectralField& f, LayeredField& out);
void jacobian_into(const SpectralField& psi, const SpectralField& q, SpectralField& out);

SpectralField laplacian(const SpectralField& f);
// Spectral d/dx, d/dy; the Nyquist row/column is zeroed (odd derivative of
// the unmatched Nyquist mode is not representable on the grid).
SpectralField derivative_x(const SpectralField& f);
SpectralField derivative_y(const SpectralField& f);

// Pseudospectral J(psi, q) = psi_x q_y - psi_y q_x per layer. The dealias
// filter is applied to the differentiated inputs of the physical-space
// product and to the result.
SpectralField jacobian(const SpectralField& psi, const SpectralField& q);

void apply_ssd(SpectralField& f);
void apply_dealias(SpectralField& f);
void apply_highpass(SpectralField& f);

// Domain-mean of f*g (and f*f) evaluated spectrally via Parseval.
double mean_square(const SpectralField& f);
double inner_mean(const SpectralField& a, const SpectralField& b);

}  // namespace cgqg::spectral
