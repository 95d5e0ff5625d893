#pragma once

#include <vector>

#include "cgqg/qg.hpp"

namespace cgqg::coarsegrain {

// Coarse-graining operator: spectral truncation to the coarse grid followed
// by one application of the coarse model's ssd filter.
struct CoarsenSpec {
    GridPtr fine;
    GridPtr coarse;

    CoarsenSpec(GridPtr fine_, GridPtr coarse_);
};

// Truncate a fine-grid spectrum to the coarse grid (coarse Nyquist row and
// column dropped to keep Hermitian symmetry clean). No filtering.
SpectralField truncate_spectrum(const SpectralField& fine_hat, const CoarsenSpec& spec);

LayeredField coarsen(const LayeredField& fine, const CoarsenSpec& spec);

// stride = coarse dt / fine dt; throws ConfigError if the ratio is not an
// integer number of fine steps.
int stride_for(double fine_dt, double coarse_dt);

// Advances the fine stepper n_fine_steps and emits a coarse snapshot every
// stride steps: floor(n_fine_steps/stride) snapshots, uniformly spaced.
std::vector<LayeredField> make_training_series(qg::Stepper& fine, const CoarsenSpec& spec,
                                               int stride, long n_fine_steps);

}  // namespace cgqg::coarsegrain
