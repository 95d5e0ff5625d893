#include "cgqg/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "cgqg/common.hpp"

namespace cgqg::rng {

namespace {

constexpr uint32_t kMul0 = 0xD2511F53u;
constexpr uint32_t kMul1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::array<uint32_t, 4>& c, const std::array<uint32_t, 2>& k) {
    const uint64_t p0 = uint64_t(kMul0) * c[0];
    const uint64_t p1 = uint64_t(kMul1) * c[2];
    const uint32_t hi0 = uint32_t(p0 >> 32), lo0 = uint32_t(p0);
    const uint32_t hi1 = uint32_t(p1 >> 32), lo1 = uint32_t(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> counter,
                                   std::array<uint32_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        round_once(counter, key);
    }
    return counter;
}

CounterStream::CounterStream(uint64_t seed, Stream tag, uint64_t a, uint64_t b)
    : key_{uint32_t(seed), uint32_t(seed >> 32)}, tag_(uint32_t(tag)) {
    // a and b index (step, member)-like coordinates; fold any overflow of the
    // 32-bit counter words into the key so distinct inputs stay distinct.
    prefix_ = {uint32_t(a), uint32_t(b)};
    const uint32_t hi_a = uint32_t(a >> 32), hi_b = uint32_t(b >> 32);
    if (hi_a || hi_b) {
        const uint64_t folded = mix64(seed, (uint64_t(hi_a) << 32) | hi_b);
        key_ = {uint32_t(folded), uint32_t(folded >> 32)};
    }
}

std::array<uint64_t, 2> CounterStream::block64(uint64_t block) const {
    std::array<uint32_t, 4> ctr = {uint32_t(block), uint32_t(block >> 32) ^ tag_,
                                   prefix_[0], prefix_[1]};
    // tag lives in the counter's high block word; block indices stay below
    // 2^32 in practice so the xor never collides across tags.
    const auto out = philox4x32(ctr, key_);
    return {(uint64_t(out[0]) << 32) | out[1], (uint64_t(out[2]) << 32) | out[3]};
}

double CounterStream::uniform(uint64_t i) const {
    const auto w = block64(i / 2);
    const uint64_t u = (i % 2 == 0) ? w[0] : w[1];
    return double(u >> 11) * 0x1.0p-53;
}

double CounterStream::gaussian(uint64_t i) const {
    const auto w = block64(i / 2);
    // u1 in (0, 1] so the log is finite
    const double u1 = double((w[0] >> 11) + 1) * 0x1.0p-53;
    const double u2 = double(w[1] >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * M_PI * u2;
    return (i % 2 == 0) ? r * std::cos(th) : r * std::sin(th);
}

void CounterStream::fill_gaussian(std::span<double> out, uint64_t first_index) const {
    const uint64_t n = out.size();
    uint64_t i = 0;
    // peel a leading odd index so the main loop runs on whole blocks
    if (first_index % 2 == 1 && n > 0) {
        out[0] = gaussian(first_index);
        i = 1;
    }
    for (; i + 1 < n; i += 2) {
        const uint64_t idx = first_index + i;
        const auto w = block64(idx / 2);
        const double u1 = double((w[0] >> 11) + 1) * 0x1.0p-53;
        const double u2 = double(w[1] >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        out[i] = r * std::cos(th);
        out[i + 1] = r * std::sin(th);
    }
    if (i < n) out[i] = gaussian(first_index + i);
}

uint64_t CounterStream::uniform_index(uint64_t i, uint64_t n) const {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    // 53-bit uniform scaled; bias is negligible for the index ranges used here
    return std::min<uint64_t>(n - 1, uint64_t(uniform(i) * double(n)));
}

}  // namespace cgqg::rng
