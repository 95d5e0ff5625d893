#pragma once

#include <optional>
#include <span>

#include "cgqg/closure.hpp"

namespace cgqg::diagnostics {

// Depth-averaged isotropic kinetic-energy spectrum, annular bins of width one
// fundamental wavenumber, values are energy density per unit kappa so that
// sum(E * dkappa) equals the domain-mean kinetic energy.
struct IsotropicSpectrum {
    double dkappa = 0.0;
    double kmax = 0.0;
    std::vector<double> kappa;  // bin centers, b * dkappa for b = 1..B
    std::vector<double> E;
    int n_snapshots = 0;

    bool same_binning(const IsotropicSpectrum& o) const {
        return dkappa == o.dkappa && kappa.size() == o.kappa.size() && kmax == o.kmax;
    }
};

IsotropicSpectrum kinetic_energy_spectrum(std::span<const LayeredField> states,
                                          const qg::QgParams& p);

// Accumulator form for long runs (snapshots folded in as they stream by).
class SpectrumAccumulator {
  public:
    SpectrumAccumulator(const qg::QgParams& p);
    void add(const SpectralField& qhat);
    IsotropicSpectrum result() const;
    int count() const { return n_; }

  private:
    qg::QgParams params_;
    GridPtr grid_;
    std::vector<double> acc_;
    int n_ = 0;
};

// Spectrum error Delta E = (1/kc) int_0^kc [log(E_model/E_truth)]^2 dkappa
// with kc = (2/3) kmax, integrated as a piecewise-constant function of the
// bins. Symmetric, dimensionless, zero iff the spectra agree below kc.
double spectrum_error(const IsotropicSpectrum& model, const IsotropicSpectrum& truth);

struct ScoreCurve {
    std::vector<double> lead_steps;
    std::vector<double> lead_hours;
    std::vector<double> mean_score;
    std::vector<double> spread;  // mean ensemble spread per lead (0 for S=1)
    int n_windows = 0;
};

// Mean energy score (and ensemble spread) per lead over disjoint validation
// windows of length `horizon`, each initialized from the observed state.
ScoreCurve score_curve(std::span<const LayeredField> validation,
                       const closure::ClosureParams& p, const qg::QgParams& qp,
                       int horizon, int S, uint64_t seed);

// Per-lead RMS deviation of ensemble members from the ensemble mean,
// averaged over state components.
std::vector<double> spread_curve(const closure::EnsembleForecast& ens);

struct LongRunReport {
    bool survived = false;
    double survival_time = 0.0;  // seconds of simulated time before blow-up
    double duration = 0.0;
    LayeredField final_state;
    std::optional<IsotropicSpectrum> spectrum;  // absent when unstable
};

// Free-running closed simulation; instability is a reported outcome. The
// time-averaged spectrum covers the stationary segment (first 10% of the
// run discarded), sampled every `spectrum_stride` steps.
LongRunReport long_run(const LayeredField& x0, const closure::ClosureParams& p,
                       const qg::QgParams& qp, double duration_s, uint64_t seed,
                       int spectrum_stride = 12);

}  // namespace cgqg::diagnostics
