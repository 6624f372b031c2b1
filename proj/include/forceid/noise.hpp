#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "forceid/linalg.hpp"

namespace forceid {

/// Additive Gaussian noise with sigma = (percent / 100) * max |clean|.
struct NoiseSpec {
    double percent = 0.0;
    std::uint64_t seed = 0;

    double sigma(std::span<const double> clean) const { return percent / 100.0 * max_abs(clean); }
};

/// Standard normal deviates from std::mt19937_64 through the Box-Muller transform.
///
/// Both pieces are fully specified, so a seed reproduces the same stream on every
/// platform (std::normal_distribution is implementation-defined and is not used).
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 == 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    // 53 high bits -> [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// clean + eps, one independent N(0, sigma^2) draw per sample.
inline Vector perturb(std::span<const double> clean, const NoiseSpec& spec) {
    Vector out(clean.begin(), clean.end());
    const double sigma = spec.sigma(clean);
    if (sigma == 0.0) return out;
    NormalStream normal(spec.seed);
    for (double& v : out) v += sigma * normal.next();
    return out;
}

}  // namespace forceid
