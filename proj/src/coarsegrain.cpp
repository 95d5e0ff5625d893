#include "cgqg/coarsegrain.hpp"

#include <cmath>
#include <stdexcept>

#include "cgqg/common.hpp"
#include "cgqg/spectral.hpp"

namespace cgqg::coarsegrain {

CoarsenSpec::CoarsenSpec(GridPtr fine_, GridPtr coarse_)
    : fine(std::move(fine_)), coarse(std::move(coarse_)) {
    if (fine->nx % coarse->nx != 0 || fine->ny % coarse->ny != 0)
        throw ConfigError("CoarsenSpec: coarse sizes must divide fine sizes");
    if (coarse->nx >= fine->nx || coarse->ny >= fine->ny)
        throw ConfigError("CoarsenSpec: coarse Nyquist must lie strictly below fine Nyquist");
    if (fine->Lx != coarse->Lx || fine->Ly != coarse->Ly)
        throw ConfigError("CoarsenSpec: grids must share the domain");
}

SpectralField truncate_spectrum(const SpectralField& fine_hat, const CoarsenSpec& spec) {
    if (fine_hat.grid.get() != spec.fine.get())
        throw std::invalid_argument("truncate_spectrum: field not on the fine grid");
    const Grid& gf = *spec.fine;
    const Grid& gc = *spec.coarse;
    SpectralField out(spec.coarse, fine_hat.nl);
    const int nkxc = gc.nkx();
    const int nkxf = gf.nkx();
    // forward transform is unnormalized, so amplitudes rescale with grid size
    const double scale = (double(gc.nx) * gc.ny) / (double(gf.nx) * gf.ny);
    for (int l = 0; l < fine_hat.nl; ++l) {
        const auto* src = fine_hat.layer(l);
        auto* dst = out.layer(l);
        for (int jc = 0; jc < gc.ny; ++jc) {
            if (jc == gc.ny / 2) continue;  // coarse Nyquist row dropped
            const int jf = (jc < gc.ny / 2) ? jc : jc + (gf.ny - gc.ny);
            for (int i = 0; i < nkxc - 1; ++i)  // coarse Nyquist column dropped
                dst[jc * nkxc + i] = src[jf * nkxf + i] * scale;
        }
    }
    return out;
}

LayeredField coarsen(const LayeredField& fine, const CoarsenSpec& spec) {
    if (fine.nx != spec.fine->nx || fine.ny != spec.fine->ny)
        throw std::invalid_argument("coarsen: field not on the fine grid");
    SpectralField hat = spectral::forward(fine, spec.fine);
    SpectralField trunc = truncate_spectrum(hat, spec);
    spectral::apply_ssd(trunc);
    LayeredField out = spectral::inverse(trunc);
    out.time = fine.time;
    return out;
}

int stride_for(double fine_dt, double coarse_dt) {
    const double ratio = coarse_dt / fine_dt;
    const int stride = int(std::lround(ratio));
    if (stride < 1 || std::abs(ratio - stride) > 1e-9 * ratio)
        throw ConfigError("stride_for: coarse dt must be an integer multiple of fine dt");
    return stride;
}

std::vector<LayeredField> make_training_series(qg::Stepper& fine, const CoarsenSpec& spec,
                                               int stride, long n_fine_steps) {
    if (stride < 1) throw ConfigError("make_training_series: stride must be >= 1");
    std::vector<LayeredField> series;
    series.reserve(std::size_t(std::max<long>(0, n_fine_steps / stride)));
    for (long n = 1; n <= n_fine_steps; ++n) {
        fine.step();
        if (n % stride == 0) series.push_back(coarsen(fine.state(), spec));
    }
    return series;
}

}  // namespace cgqg::coarsegrain
