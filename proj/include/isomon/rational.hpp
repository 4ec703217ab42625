#pragma once
#include <gmpxx.h>
#include <string>
#include <vector>

namespace isomon {

// Exact rational arithmetic (weights, degrees, lambda bookkeeping).
using Rat = mpq_class;
using RatVec = std::vector<Rat>;

inline Rat rat(long num, long den = 1) {
    Rat q(num, den);
    q.canonicalize();
    return q;
}

inline double to_double(const Rat& q) { return q.get_d(); }

inline std::string to_string(const Rat& q) { return q.get_str(); }

} // namespace isomon
