#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgqg {

inline constexpr const char* kCodeVersion = "cgqg 0.1.0";

// Thrown when a trajectory exceeds the blow-up threshold or goes non-finite.
// Instability is always a typed error, never silent NaN propagation.
struct InstabilityError : std::runtime_error {
    double time;
    long step;
    double max_abs;
    InstabilityError(double t, long n, double m)
        : std::runtime_error("instability detected at t=" + std::to_string(t) +
                             " s (step " + std::to_string(n) + ", max|q|=" + std::to_string(m) + ")"),
          time(t), step(n), max_abs(m) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// 64-byte aligned allocator for FFT-friendly field buffers.
template <class T>
struct AlignedAlloc {
    using value_type = T;
    static constexpr std::size_t alignment = 64;

    AlignedAlloc() noexcept = default;
    template <class U>
    AlignedAlloc(const AlignedAlloc<U>&) noexcept {}

    T* allocate(std::size_t n) {
        if (n == 0) return nullptr;
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t(alignment)));
    }
    void deallocate(T* p, std::size_t) noexcept {
        ::operator delete(p, std::align_val_t(alignment));
    }
    template <class U>
    bool operator==(const AlignedAlloc<U>&) const noexcept { return true; }
};

template <class T>
using avec = std::vector<T, AlignedAlloc<T>>;

inline uint64_t fnv1a64(const void* data, std::size_t n, uint64_t h = 14695981039346656037ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 14695981039346656037ull) {
    return fnv1a64(s.data(), s.size(), h);
}

std::string hex64(uint64_t v);

// splitmix64 finalizer; used to derive child seeds from (seed, tag) pairs.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(a ^ mix64(b)); }

// Formats a double so that it parses back bit-exactly (%.17g).
std::string fmt_g17(double v);

}  // namespace cgqg
