#pragma once
#include <array>
#include <cmath>
#include <complex>
#include <string>

namespace isomon {

using cplx = std::complex<double>;

inline constexpr double PI = 3.14159265358979323846;

// 2x2 complex matrix [[a,b],[c,d]].  `exact` marks entries that carry no
// roundoff (input given as integers/rationals); arithmetic propagates it.
struct Mat2 {
    cplx a{}, b{}, c{}, d{};
    bool exact = false;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0, true}; }
    static Mat2 zero() { return {0.0, 0.0, 0.0, 0.0, true}; }
};

inline Mat2 operator+(const Mat2& x, const Mat2& y) {
    return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d, x.exact && y.exact};
}
inline Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d, x.exact && y.exact};
}
inline Mat2 operator-(const Mat2& x) { return {-x.a, -x.b, -x.c, -x.d, x.exact}; }
inline Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d, x.exact && y.exact};
}
inline Mat2 operator*(cplx s, const Mat2& x) { return {s * x.a, s * x.b, s * x.c, s * x.d, false}; }
inline Mat2& operator+=(Mat2& x, const Mat2& y) { x = x + y; return x; }
inline Mat2& operator-=(Mat2& x, const Mat2& y) { x = x - y; return x; }

inline cplx tr(const Mat2& m) { return m.a + m.d; }
inline cplx det(const Mat2& m) { return m.a * m.d - m.b * m.c; }

inline Mat2 inverse(const Mat2& m) {
    cplx dd = det(m);
    return {m.d / dd, -m.b / dd, -m.c / dd, m.a / dd, false};
}

inline Mat2 commutator(const Mat2& x, const Mat2& y) { return x * y - y * x; }

inline double fnorm(const Mat2& m) {
    return std::sqrt(std::norm(m.a) + std::norm(m.b) + std::norm(m.c) + std::norm(m.d));
}

inline double max_abs_entry(const Mat2& m) {
    return std::max(std::max(std::abs(m.a), std::abs(m.b)),
                    std::max(std::abs(m.c), std::abs(m.d)));
}

// Eigenvalues as roots of X^2 - tr X + det, deterministic order: the root
// (tr + s)/2 with s the principal sqrt of the discriminant comes first.
inline std::array<cplx, 2> eigenvalues(const Mat2& m) {
    cplx t = tr(m), dd = det(m);
    cplx s = std::sqrt(t * t - 4.0 * dd);
    return {(t + s) / 2.0, (t - s) / 2.0};
}

inline bool is_scalar(const Mat2& m, double tol) {
    cplx h = tr(m) / 2.0;
    Mat2 dev{m.a - h, m.b, m.c, m.d - h, false};
    return fnorm(dev) <= tol * (1.0 + fnorm(m));
}

// Projective line [u:v] in the fiber C^2.
struct Line {
    cplx u{1.0}, v{0.0};
};

inline Line apply(const Mat2& m, const Line& l) {
    return {m.a * l.u + m.b * l.v, m.c * l.u + m.d * l.v};
}

// |u1 v2 - u2 v1| scaled by the line norms; 0 iff same projective point.
inline double line_distance(const Line& x, const Line& y) {
    double nx = std::sqrt(std::norm(x.u) + std::norm(x.v));
    double ny = std::sqrt(std::norm(y.u) + std::norm(y.v));
    if (nx == 0.0 || ny == 0.0) return 1.0;
    return std::abs(x.u * y.v - x.v * y.u) / (nx * ny);
}

inline bool lines_equal(const Line& x, const Line& y, double tol) {
    return line_distance(x, y) <= tol;
}

// Eigenline of m for eigenvalue ev: kernel of (m - ev), via the larger row
// of the adjugate-style kernel construction.  Caller checks ev is near the
// spectrum; for a scalar matrix the kernel is everything and [1:0] is returned.
inline Line eigenline(const Mat2& m, cplx ev) {
    cplx ra = m.a - ev, rd = m.d - ev;
    double n1 = std::max(std::abs(ra), std::abs(m.b));  // row (ra, b)
    double n2 = std::max(std::abs(m.c), std::abs(rd));  // row (c, rd)
    if (n1 == 0.0 && n2 == 0.0) return {1.0, 0.0};      // scalar matrix
    Line l = (n1 >= n2) ? Line{-m.b, ra} : Line{-rd, m.c};
    // normalize largest component to 1 (deterministic representative)
    if (std::abs(l.u) >= std::abs(l.v)) {
        l.v /= l.u; l.u = 1.0;
    } else {
        l.u /= l.v; l.v = 1.0;
    }
    return l;
}

} // namespace isomon
