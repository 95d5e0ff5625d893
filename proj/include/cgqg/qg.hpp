#pragma once

#include <cstdint>

#include "cgqg/field.hpp"

namespace cgqg::qg {

// Physical and numerical parameters of the two-layer Phillips model.
// beta1/beta2 are always recomputed from the primitives, never stored.
struct QgParams {
    double Lx = 1.0e6, Ly = 1.0e6;     // m
    double H1 = 500.0, H2 = 5000.0;    // m
    double Ubar1 = 0.025;              // m/s, imposed upper-layer zonal mean flow
    double beta = 1.0e-11;             // 1/(m s)
    double gamma = 7.0e-8;             // 1/s, bottom friction
    double rd = 15.0e3;                // m, first deformation radius (k_d = 1/rd)
    int nx = 64, ny = 64;
    double dt = 7200.0;                // s

    double kd2() const { return 1.0 / (rd * rd); }
    // layer coupling coefficients in the PV anomaly definition
    double coupling1() const { return kd2() / (1.0 + H1 / H2); }
    double coupling2() const { return (H1 / H2) * kd2() / (1.0 + H1 / H2); }
    double beta1() const { return beta + coupling1() * Ubar1; }
    double beta2() const { return beta - coupling2() * Ubar1; }

    void validate() const;
    GridPtr make_grid() const;
    uint64_t hash() const;

    // jet configuration of the reference table, at the given resolution
    static QgParams jet(int nx, int ny, double dt);
};

// Term switches for tests (linear-dynamics oracles, inviscid conservation).
struct StepOptions {
    bool advection = true;
    bool beta_term = true;
    bool mean_flow = true;
    bool friction = true;
    bool ssd = true;
};

// Solve q = M(kappa^2) psi per mode for the stream function; zero mode of
// psi is gauged to 0.
SpectralField invert_pv(const SpectralField& q, const QgParams& p);
void invert_pv_into(const SpectralField& q, const QgParams& p, SpectralField& psi);
// Forward operator psi -> q (explicit; used as the inversion round-trip check
// and by diagnostics).
SpectralField pv_of(const SpectralField& psi, const QgParams& p);

// dq/dt of the Phillips system; ssd is applied by the stepper, not here.
SpectralField tendency(const SpectralField& q, const QgParams& p,
                       const StepOptions& opts = {});
void tendency_into(const SpectralField& q, const QgParams& p, const StepOptions& opts,
                   SpectralField& out);

// Single-trajectory AB3 stepper with Euler/AB2 bootstrap. Holds the state in
// spectral space and mirrors it in physical space; throws InstabilityError
// when |q| exceeds the blow-up threshold or goes non-finite.
class Stepper {
  public:
    Stepper(const QgParams& p, LayeredField q0, StepOptions opts = {});

    void step();
    // Adds a physical-space increment to the current state (closure hook).
    void add_increment(const LayeredField& m);

    const LayeredField& state() const { return phys_; }
    const SpectralField& state_spectral() const { return qhat_; }
    const GridPtr& grid() const { return grid_; }
    const QgParams& params() const { return params_; }
    double time() const { return phys_.time; }
    long step_count() const { return nstep_; }

    // total energy -<psi q>/2 and enstrophy <q^2>/2 with layer-thickness
    // weights (the form conserved by the advective dynamics)
    double energy() const;
    double enstrophy() const;

  private:
    void check_stability();

    QgParams params_;
    StepOptions opts_;
    GridPtr grid_;
    SpectralField qhat_;
    LayeredField phys_;
    SpectralField tend_nm1_, tend_nm2_, tend_spare_;
    long nstep_ = 0;
    double blowup_threshold_ = 0.0;
};

double total_energy(const SpectralField& q, const QgParams& p);
double total_enstrophy(const SpectralField& q, const QgParams& p);

// Integrates from band-limited Gaussian PV noise (rms 1e-7 1/s) for the
// given duration and returns the final state.
LayeredField spin_up(const QgParams& p, uint64_t seed, double duration_s);

LayeredField initial_noise(const QgParams& p, uint64_t seed);

}  // namespace cgqg::qg
