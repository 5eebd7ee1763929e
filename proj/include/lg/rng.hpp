#pragma once

#include <cstdint>

namespace lg {

// Counter-based generator (SplitMix64 finalizer over key + counter).  Being
// stateless per draw, streams can be split by (seed, stream, trial) so that
// trial i produces the same values regardless of thread count or execution
// order.
class CounterRng {
  public:
    CounterRng() = default;
    CounterRng(uint64_t key, uint64_t counter = 0) : key_(key), ctr_(counter) {}

    static uint64_t mix(uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Independent stream for one trial of one named experiment stream.
    static CounterRng for_trial(uint64_t seed, uint64_t stream, uint64_t trial) {
        uint64_t key = mix(seed ^ mix(stream ^ 0x517cc1b727220a95ULL));
        return CounterRng(mix(key ^ mix(trial)));
    }

    uint64_t next_u64() { return mix(key_ ^ (ctr_++ * 0xd1342543de82ef95ULL)); }

    /// Uniform in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] inclusive.
    long long uniform_int(long long lo, long long hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        // Rejection-free mod is fine here: span is tiny relative to 2^64.
        return lo + static_cast<long long>(next_u64() % span);
    }

    bool bernoulli(double p) { return next_unit() < p; }

  private:
    uint64_t key_ = 0x9e3779b97f4a7c15ULL;
    uint64_t ctr_ = 0;
};

}  // namespace lg
