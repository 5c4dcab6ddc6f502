#pragma once

#include <cstdint>

namespace rpf {

// Philox 4x32-10 counter-based generator (Salmon et al., SC 2011).
//
// A stream is addressed by (seed, domain, step, unit) and draws advance a
// 64-bit counter inside the stream. Distinct addresses never overlap, so
// per-particle randomness is independent of evaluation order and the same
// seed reproduces a run bit for bit regardless of threading.

struct PhiloxBlock {
    uint32_t v[4];
};

PhiloxBlock philox4x32(const uint32_t counter[4], const uint32_t key[2]);

// Stream address spaces. Keep values stable: they are part of the
// reproducibility contract (a seed + domain layout defines the run).
enum class Domain : uint32_t {
    kPrior = 0,        // initial particle draws
    kTransition = 1,   // per-particle state propagation
    kResample = 2,     // per-step selection draws
    kJitter = 3,       // per-particle regularization noise
    kObservation = 4,  // synthetic observation noise
    kTruth = 5,        // latent truth propagation in simulations
    kWeather = 6,      // synthetic weather noise
    kGeneric = 7,      // tests and one-off consumers
};

class RandomStream {
public:
    RandomStream(uint64_t seed, Domain domain, uint32_t step, uint32_t unit);

    uint64_t next_u64();
    double uniform();      // [0, 1)
    double uniform_pos();  // (0, 1]
    double gaussian();     // standard normal (Box-Muller, cached pair)

private:
    uint32_t key_[2];
    uint32_t prefix_[2];  // {unit, domain | step}
    uint64_t draw_ = 0;   // 128-bit blocks consumed so far
    PhiloxBlock block_{};
    int block_pos_ = 2;   // 64-bit lanes left in block_: 2 - block_pos_
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace rpf
