#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "isomon/mat2.hpp"

namespace isomon {

// Representation data for the n-punctured sphere: images of the first n-1
// loop generators.  The image of the last loop is the inverse product.
struct RepTuple {
    std::vector<Mat2> m;

    int n() const { return static_cast<int>(m.size()) + 1; }
};

// Throws validation_error unless every matrix has determinant 1 within tol.
void validate_rep(const RepTuple& rep, double tol);

// Single, pair and triple traces of (M_1,...,M_{n-1}), pairs and triples in
// lexicographic index order; a_n is the trace of the inverse product.
struct TraceCoordinates {
    int n = 0;
    std::vector<cplx> a;
    std::vector<cplx> pair;
    std::vector<cplx> triple;

    std::vector<cplx> flat() const;  // a ++ pair ++ triple
    // n=4 cubic coordinates (x1,x2,x3) = (tr M2M3, tr M3M1, tr M1M2)
    std::array<cplx, 3> fricke_x() const;
};

TraceCoordinates invariant_fingerprint(const RepTuple& rep);

bool jordan_equivalent(const RepTuple& r1, const RepTuple& r2, double tol);

// theta_1 = a1 a4 + a2 a3 (cyclically) and
// theta_4 = a1 a2 a3 a4 + a1^2 + a2^2 + a3^2 + a4^2 - 4
std::array<cplx, 4> theta_coefficients(const std::array<cplx, 4>& a);

// f(x,a) = x1 x2 x3 + x1^2 + x2^2 + x3^2 - theta1 x1 - theta2 x2 - theta3 x3 + theta4
cplx fricke_eval(const std::array<cplx, 3>& x, const std::array<cplx, 4>& a);

// Points with f = 0 and grad f = 0, by Newton from a deterministic seed grid
// (5x5x5 real on [-3,3]^3 plus 25 fixed pseudo-random complex starts);
// duplicates merged at distance 1e-6, output sorted lexicographically.
std::vector<std::array<cplx, 3>> find_fricke_singular_points(const std::array<cplx, 4>& a,
                                                             double tol);

// a_i = 2 cos(2 pi lambda_i), complex cosine
std::vector<cplx> mu_map(const std::vector<cplx>& lambda);

// Tuple with tr M_i = a_i and tr(M_1...M_{n-1}) = a_n: draws M_2..M_{n-1}
// with the prescribed traces, then places M_1 on the intersection of the
// det = 1 quadric with the trace hyperplane via conic parametrization.
// Throws undetermined_error when the retry budget is exhausted.
RepTuple sample_fiber_point(const std::vector<cplx>& a, uint64_t seed);

struct MultiaffineReport {
    double max_second_difference = 0.0;
    double scale = 1.0;  // max(1, |g|) over all probe evaluations
};

// Second differences of g(s) = tr(M_1...M_i(s)...M_{n-1}) where one entry of
// M_i is replaced by s-h, s, s+h; zero certifies affine dependence on every
// entry.  `squared` probes g^2 instead (nonzero control).
MultiaffineReport multiaffine_check(const RepTuple& rep, int index,
                                    const std::vector<cplx>& probes, double h,
                                    bool squared = false);

// sigma_k: (..., M_k, M_{k+1}, ...) -> (..., M_k M_{k+1} M_k^{-1}, M_k, ...),
// 1 <= k <= n-2; the tuple product is unchanged.
RepTuple braid_act(const RepTuple& rep, int k, bool inverse = false);

} // namespace isomon
