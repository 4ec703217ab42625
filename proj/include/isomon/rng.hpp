#pragma once
#include <cstdint>
#include <random>

#include "isomon/mat2.hpp"

namespace isomon {

// Seeded deterministic RNG.  Doubles are produced from raw engine output
// (not std::uniform_real_distribution) so streams are reproducible across
// standard libraries.
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(uint64_t seed) : gen(seed) {}

    uint64_t bits() { return gen(); }

    double unit() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    cplx box(double re_lo, double re_hi, double im_lo, double im_hi) {
        double re = uniform(re_lo, re_hi);
        double im = uniform(im_lo, im_hi);
        return {re, im};
    }

    // Random SL2 with entries O(1): a,b,c drawn, d solved from det = 1.
    Mat2 sl2() {
        for (;;) {
            cplx a = box(-1, 1, -1, 1), b = box(-1, 1, -1, 1), c = box(-1, 1, -1, 1);
            if (std::abs(a) < 0.2) continue;
            return {a, b, c, (1.0 + b * c) / a};
        }
    }

    // Random SL2 with prescribed trace: companion of X^2 - t X + 1 conjugated
    // by a random SL2 element.
    Mat2 sl2_with_trace(cplx t) {
        Mat2 comp{t, -1.0, 1.0, 0.0};
        Mat2 g = sl2();
        return g * comp * inverse(g);
    }
};

} // namespace isomon
