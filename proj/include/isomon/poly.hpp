#pragma once
#include <vector>

#include "isomon/mat2.hpp"

namespace isomon {

// Dense polynomials over C, coefficients ascending (p[k] multiplies z^k).
using Poly = std::vector<cplx>;

inline int degree(const Poly& p) {
    for (int k = static_cast<int>(p.size()) - 1; k >= 0; --k)
        if (p[k] != 0.0) return k;
    return -1;
}

inline Poly trimmed(Poly p, double tol = 0.0) {
    while (!p.empty() && std::abs(p.back()) <= tol) p.pop_back();
    return p;
}

inline cplx eval(const Poly& p, cplx z) {
    cplx r = 0.0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * z + *it;
    return r;
}

inline Poly derivative(const Poly& p) {
    Poly d;
    for (size_t k = 1; k < p.size(); ++k) d.push_back(static_cast<double>(k) * p[k]);
    return d;
}

inline Poly add(const Poly& p, const Poly& q) {
    Poly r(std::max(p.size(), q.size()), 0.0);
    for (size_t k = 0; k < p.size(); ++k) r[k] += p[k];
    for (size_t k = 0; k < q.size(); ++k) r[k] += q[k];
    return r;
}

inline Poly scale(cplx s, const Poly& p) {
    Poly r = p;
    for (auto& c : r) c *= s;
    return r;
}

inline Poly mul(const Poly& p, const Poly& q) {
    if (p.empty() || q.empty()) return {};
    Poly r(p.size() + q.size() - 1, 0.0);
    for (size_t i = 0; i < p.size(); ++i)
        for (size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
    return r;
}

// monic product of (z - r_k)
inline Poly from_roots(const std::vector<cplx>& roots) {
    Poly p{1.0};
    for (cplx r : roots) p = mul(p, Poly{-r, 1.0});
    return p;
}

// Roots via companion-matrix eigenvalues (implemented in fuchsian.cpp with
// Eigen).  Trailing coefficients below tol*scale are treated as zero.
std::vector<cplx> poly_roots(const Poly& p, double tol = 1e-12);

} // namespace isomon
