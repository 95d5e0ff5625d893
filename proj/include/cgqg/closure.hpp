#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgqg/qg.hpp"

namespace cgqg::closure {

enum class FamilyKind : uint32_t {
    LinearSpectral = 1,  // radial-band spectral gains on state and noise
    LocalStencil = 2,    // shared 5x5 periodic conv over (q1,q2[,xi1,xi2]) + tanh
};

struct ClosureFamily {
    FamilyKind kind = FamilyKind::LinearSpectral;
    bool stochastic = true;
    int bands = 12;  // LinearSpectral radial bands

    int theta_size() const;
    int noise_channels() const { return stochastic ? 2 : 0; }
    uint32_t id() const { return uint32_t(kind) | (stochastic ? 0x100u : 0u); }
    std::string name() const;

    static ClosureFamily parse(const std::string& name, bool stochastic, int bands);
};

struct ClosureParams {
    ClosureFamily family;
    std::vector<double> theta;

    static ClosureParams zeros(const ClosureFamily& f) {
        return {f, std::vector<double>(f.theta_size(), 0.0)};
    }
    void validate() const;
};

// Standard-Gaussian field shaped like the resolved state, reproducible from
// its provenance (seed, member, step).
struct NoiseField {
    LayeredField values;
    uint64_t seed = 0;
    uint32_t member = 0;
    uint64_t step = 0;
};

NoiseField make_noise(const GridPtr& g, uint64_t seed, uint32_t member, uint64_t step);

// Model-error increment m = G_theta(x, xi). Output has exactly zero spatial
// mean per layer and passes through the kappa^2/kmax^2 high-pass multiplier.
// xi may be null for deterministic families.
LayeredField apply_closure(const LayeredField& x, const NoiseField* xi,
                           const ClosureParams& p, const GridPtr& g);

// Coarse stepper with the closure increment added after each model step:
// x_{n+1} = Phi(x_n) + G_theta(x_n, xi_n).
class ClosedStepper {
  public:
    ClosedStepper(const qg::QgParams& p, LayeredField x0, ClosureParams cp,
                  uint64_t noise_seed, uint32_t member = 0);
    void step();
    const LayeredField& state() const { return stepper_.state(); }
    const SpectralField& state_spectral() const { return stepper_.state_spectral(); }
    const GridPtr& grid() const { return stepper_.grid(); }
    double time() const { return stepper_.time(); }
    long step_count() const { return stepper_.step_count(); }

  private:
    qg::Stepper stepper_;
    ClosureParams params_;
    uint64_t noise_seed_;
    uint32_t member_;
};

// One closed step from a fresh state (bootstrap Euler step of the stepper).
LayeredField closed_step(const LayeredField& x, const NoiseField* xi,
                         const ClosureParams& cp, const qg::QgParams& qp);

struct EnsembleForecast {
    LayeredField initial;
    int S = 0, w = 0;
    uint64_t seed = 0;
    // traj[s][n] is member s at lead n+1; valid only for n < failed_at[s]
    // (failed_at[s] == w when the member survived the whole window)
    std::vector<std::vector<LayeredField>> traj;
    std::vector<int> failed_at;

    bool member_ok_at(int s, int lead) const { return failed_at[s] >= lead; }
    bool all_ok_at(int lead) const {
        for (int s = 0; s < S; ++s)
            if (!member_ok_at(s, lead)) return false;
        return true;
    }
};

// S independent members over w steps from a shared initial condition;
// per-member noise streams are derived from (seed, member), so members are
// exchangeable under index permutation. Failed members are flagged, not fatal.
EnsembleForecast rollout_ensemble(const LayeredField& x0, const ClosureParams& cp,
                                  const qg::QgParams& qp, int w, int S, uint64_t seed);

}  // namespace cgqg::closure
