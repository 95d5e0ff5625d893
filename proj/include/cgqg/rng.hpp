#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace cgqg::rng {

// Philox4x32-10 counter-based generator (Salmon et al. 2011). Every draw is a
// pure function of (key, counter), so noise fields, ensemble members and Monte
// Carlo batches are reproducible independent of thread count and evaluation
// order.
std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> counter,
                                   std::array<uint32_t, 2> key);

// Disjoint sub-stream tags. Each distinct use of randomness gets its own tag
// so that e.g. closure noise and optimizer perturbations never overlap.
enum class Stream : uint32_t {
    ClosureNoise = 1,
    SpinupInit = 2,
    EsPerturb = 3,
    MonteCarlo = 4,
    BatchSelect = 5,
    Ar1Noise = 6,
    WindowSeed = 7,
    EsEval = 8,
};

// A lazily-indexed stream of uniforms/gaussians. key = seed, counter encodes
// (tag, a, b, block): same (seed, tag, a, b, i) always yields the same value.
class CounterStream {
  public:
    CounterStream(uint64_t seed, Stream tag, uint64_t a = 0, uint64_t b = 0);

    // i-th uniform deviate in [0, 1)
    double uniform(uint64_t i) const;
    // i-th standard normal deviate (Box-Muller on counter-indexed uniforms)
    double gaussian(uint64_t i) const;
    void fill_gaussian(std::span<double> out, uint64_t first_index = 0) const;

    // uniform integer in [0, n), for index sampling
    uint64_t uniform_index(uint64_t i, uint64_t n) const;

  private:
    std::array<uint32_t, 2> key_;
    std::array<uint32_t, 2> prefix_;  // (a, b) folded to 32-bit words
    uint32_t tag_;

    std::array<uint64_t, 2> block64(uint64_t block) const;
};

}  // namespace cgqg::rng
