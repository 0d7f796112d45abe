#pragma once

#include <cstdint>

namespace divs {

// Counter-based generator: every value is a pure function of (key, counter),
// so streams are reproducible across platforms and independent of draw order.
// Mixing is splitmix64; doubles take the top 53 bits.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    // Derives a child key; used to partition the seed space per domain
    // (frames, model init, labels) without stream overlap.
    static std::uint64_t derive(std::uint64_t key, std::uint64_t salt) {
        return mix(mix(key) ^ mix(salt + 0x632be59bd9b4e019ull));
    }

    std::uint64_t bits(std::uint64_t counter) const {
        return mix(key_ ^ mix(counter));
    }

    // Uniform in [0, 1).
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(std::uint64_t counter, double lo, double hi) const {
        return lo + (hi - lo) * uniform(counter);
    }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

// Sequential convenience wrapper over CounterRng for test/scenario code that
// just wants a stream of draws.
class SeqRng {
public:
    explicit SeqRng(std::uint64_t key) : rng_(key) {}

    double uniform() { return rng_.uniform(next_++); }
    double uniform(double lo, double hi) { return rng_.uniform(next_++, lo, hi); }
    std::uint64_t bits() { return rng_.bits(next_++); }

    // Integer in [lo, hi] inclusive.
    long long integer(long long lo, long long hi) {
        return lo + static_cast<long long>(bits() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    CounterRng rng_;
    std::uint64_t next_ = 0;
};

}  // namespace divs
