#include "rpf/rng.hpp"

#include <cmath>

namespace rpf {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mul_hi_lo(uint32_t a, uint32_t b, uint32_t* hi, uint32_t* lo) {
    const uint64_t p = static_cast<uint64_t>(a) * b;
    *hi = static_cast<uint32_t>(p >> 32);
    *lo = static_cast<uint32_t>(p);
}

inline void round_once(uint32_t c[4], const uint32_t k[2]) {
    uint32_t hi0, lo0, hi1, lo1;
    mul_hi_lo(kPhiloxM0, c[0], &hi0, &lo0);
    mul_hi_lo(kPhiloxM1, c[2], &hi1, &lo1);
    const uint32_t out[4] = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    c[0] = out[0];
    c[1] = out[1];
    c[2] = out[2];
    c[3] = out[3];
}

}  // namespace

PhiloxBlock philox4x32(const uint32_t counter[4], const uint32_t key[2]) {
    uint32_t c[4] = {counter[0], counter[1], counter[2], counter[3]};
    uint32_t k[2] = {key[0], key[1]};
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kPhiloxW0;
            k[1] += kPhiloxW1;
        }
        round_once(c, k);
    }
    return PhiloxBlock{{c[0], c[1], c[2], c[3]}};
}

RandomStream::RandomStream(uint64_t seed, Domain domain, uint32_t step, uint32_t unit) {
    key_[0] = static_cast<uint32_t>(seed);
    key_[1] = static_cast<uint32_t>(seed >> 32);
    prefix_[0] = unit;
    prefix_[1] = (static_cast<uint32_t>(domain) << 28) | (step & 0x0FFFFFFFu);
}

uint64_t RandomStream::next_u64() {
    if (block_pos_ >= 2) {
        const uint32_t counter[4] = {static_cast<uint32_t>(draw_),
                                     static_cast<uint32_t>(draw_ >> 32), prefix_[0],
                                     prefix_[1]};
        block_ = philox4x32(counter, key_);
        ++draw_;
        block_pos_ = 0;
    }
    const int i = 2 * block_pos_++;
    return (static_cast<uint64_t>(block_.v[i + 1]) << 32) | block_.v[i];
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RandomStream::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

}  // namespace rpf
