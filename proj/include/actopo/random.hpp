#pragma once

// Portable seeded sampling. The standard distributions are
// implementation-defined, so byte-identical output across toolchains
// needs these instead.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace actopo::rng {

using Engine = std::mt19937_64;

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Engine& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Standard normal by Box-Muller (one value per call, the pair is discarded).
inline double normal(Engine& g) {
    double u1 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform direction on S^{d-1}.
inline Eigen::VectorXd unit_vector(int d, Engine& g) {
    Eigen::VectorXd v(d);
    do {
        for (int i = 0; i < d; ++i) v(i) = normal(g);
    } while (v.norm() < 1e-12);
    return v.normalized();
}

/// Uniform point in the unit ball of R^d.
inline Eigen::VectorXd in_unit_ball(int d, Engine& g) {
    return unit_vector(d, g) * std::pow(uniform01(g), 1.0 / d);
}

}  // namespace actopo::rng
