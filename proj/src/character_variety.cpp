#include "isomon/character_variety.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Dense>

#include "isomon/errors.hpp"
#include "isomon/rng.hpp"

namespace isomon {

void validate_rep(const RepTuple& rep, double tol) {
    if (rep.m.size() < 2)
        throw validation_error("representation tuple needs at least 2 matrices");
    for (size_t i = 0; i < rep.m.size(); ++i) {
        double dev = std::abs(det(rep.m[i]) - 1.0);
        if (dev > tol * (1.0 + fnorm(rep.m[i]))) {
            std::ostringstream os;
            os << "matrix " << i + 1 << " is not in SL2 (|det - 1| = " << dev << ")";
            throw validation_error(os.str());
        }
    }
}

std::vector<cplx> TraceCoordinates::flat() const {
    std::vector<cplx> out = a;
    out.insert(out.end(), pair.begin(), pair.end());
    out.insert(out.end(), triple.begin(), triple.end());
    return out;
}

std::array<cplx, 3> TraceCoordinates::fricke_x() const {
    // pairs for n=4 are (1,2), (1,3), (2,3)
    return {pair[2], pair[1], pair[0]};
}

TraceCoordinates invariant_fingerprint(const RepTuple& rep) {
    int k = static_cast<int>(rep.m.size());
    TraceCoordinates tc;
    tc.n = k + 1;
    for (int i = 0; i < k; ++i) tc.a.push_back(tr(rep.m[i]));
    Mat2 prod = Mat2::identity();
    for (int i = 0; i < k; ++i) prod = prod * rep.m[i];
    tc.a.push_back(tr(inverse(prod)));
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) tc.pair.push_back(tr(rep.m[i] * rep.m[j]));
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            for (int l = j + 1; l < k; ++l)
                tc.triple.push_back(tr(rep.m[i] * rep.m[j] * rep.m[l]));
    return tc;
}

bool jordan_equivalent(const RepTuple& r1, const RepTuple& r2, double tol) {
    if (r1.m.size() != r2.m.size())
        throw validation_error("tuples have different lengths");
    auto f1 = invariant_fingerprint(r1).flat();
    auto f2 = invariant_fingerprint(r2).flat();
    for (size_t i = 0; i < f1.size(); ++i)
        if (std::abs(f1[i] - f2[i]) > tol) return false;
    return true;
}

std::array<cplx, 4> theta_coefficients(const std::array<cplx, 4>& a) {
    return {a[0] * a[3] + a[1] * a[2], a[1] * a[3] + a[2] * a[0],
            a[2] * a[3] + a[0] * a[1],
            a[0] * a[1] * a[2] * a[3] + a[0] * a[0] + a[1] * a[1] + a[2] * a[2] +
                a[3] * a[3] - 4.0};
}

cplx fricke_eval(const std::array<cplx, 3>& x, const std::array<cplx, 4>& a) {
    auto th = theta_coefficients(a);
    return x[0] * x[1] * x[2] + x[0] * x[0] + x[1] * x[1] + x[2] * x[2] -
           th[0] * x[0] - th[1] * x[1] - th[2] * x[2] + th[3];
}

std::vector<std::array<cplx, 3>> find_fricke_singular_points(const std::array<cplx, 4>& a,
                                                             double tol) {
    auto th = theta_coefficients(a);
    double sc = 1.0;
    for (cplx t : th) sc = std::max(sc, std::abs(t));

    auto grad = [&](const Eigen::Vector3cd& x) {
        Eigen::Vector3cd g;
        g(0) = x(1) * x(2) + 2.0 * x(0) - th[0];
        g(1) = x(2) * x(0) + 2.0 * x(1) - th[1];
        g(2) = x(0) * x(1) + 2.0 * x(2) - th[2];
        return g;
    };

    std::vector<Eigen::Vector3cd> seeds;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 5; ++k)
                seeds.emplace_back(cplx(-3.0 + 1.5 * i), cplx(-3.0 + 1.5 * j),
                                   cplx(-3.0 + 1.5 * k));
    Rng rng(0x5ca1ab1eu);
    for (int k = 0; k < 25; ++k)
        seeds.emplace_back(rng.box(-3, 3, -3, 3), rng.box(-3, 3, -3, 3),
                           rng.box(-3, 3, -3, 3));

    std::vector<std::array<cplx, 3>> found;
    for (const auto& seed : seeds) {
        Eigen::Vector3cd x = seed;
        bool converged = false;
        for (int it = 0; it < 60; ++it) {
            Eigen::Vector3cd g = grad(x);
            if (g.norm() <= 1e-13 * sc) {
                converged = true;
                break;
            }
            Eigen::Matrix3cd h;
            h << 2.0, x(2), x(1), x(2), 2.0, x(0), x(1), x(0), 2.0;
            Eigen::Vector3cd step = h.colPivHouseholderQr().solve(g);
            if (!step.allFinite()) break;
            x -= step;
            if (x.norm() > 1e4) break;
        }
        if (!converged) continue;
        std::array<cplx, 3> pt = {x(0), x(1), x(2)};
        if (grad(x).norm() > tol * sc) continue;
        if (std::abs(fricke_eval(pt, a)) > tol * sc) continue;
        bool dup = false;
        for (const auto& q : found) {
            double d = std::max({std::abs(pt[0] - q[0]), std::abs(pt[1] - q[1]),
                                 std::abs(pt[2] - q[2])});
            if (d <= 1e-6) dup = true;
        }
        if (!dup) found.push_back(pt);
    }
    std::sort(found.begin(), found.end(), [](const auto& p, const auto& q) {
        for (int i = 0; i < 3; ++i) {
            if (p[i].real() != q[i].real()) return p[i].real() < q[i].real();
            if (p[i].imag() != q[i].imag()) return p[i].imag() < q[i].imag();
        }
        return false;
    });
    return found;
}

std::vector<cplx> mu_map(const std::vector<cplx>& lambda) {
    std::vector<cplx> a;
    a.reserve(lambda.size());
    for (cplx l : lambda) a.push_back(2.0 * std::cos(2.0 * PI * l));
    return a;
}

namespace {

struct ConicPoint {
    Eigen::Vector3cd p;
    bool ok = false;
};

// one projective point on {p^T C p = 0}, by scanning coordinate points and
// coordinate lines (a complex quadratic always has a root)
ConicPoint conic_point(const Eigen::Matrix3cd& C, double eps) {
    ConicPoint r;
    for (int i = 0; i < 3; ++i)
        if (std::abs(C(i, i)) <= eps) {
            r.p = Eigen::Vector3cd::Unit(i);
            r.ok = true;
            return r;
        }
    for (int i = 0; i < 3 && !r.ok; ++i)
        for (int j = i + 1; j < 3 && !r.ok; ++j) {
            // q(e_i + s e_j) = C_ii + 2 s C_ij + s^2 C_jj, C_jj != 0 here
            cplx disc = C(i, j) * C(i, j) - C(i, i) * C(j, j);
            cplx s = (-C(i, j) + std::sqrt(disc)) / C(j, j);
            r.p = Eigen::Vector3cd::Unit(i) + s * Eigen::Vector3cd::Unit(j);
            r.ok = true;
        }
    return r;
}

} // namespace

RepTuple sample_fiber_point(const std::vector<cplx>& a, uint64_t seed) {
    int n = static_cast<int>(a.size());
    if (n < 3) throw validation_error("need at least 3 trace targets");
    Rng rng(seed);
    double asc = 1.0;
    for (cplx v : a) asc = std::max(asc, std::abs(v));

    std::string witness = "no attempt";
    for (int attempt = 0; attempt < 32; ++attempt) {
        RepTuple rep;
        rep.m.assign(n - 1, Mat2::identity());
        for (int i = 1; i < n - 1; ++i) rep.m[i] = rng.sl2_with_trace(a[i]);
        Mat2 F = Mat2::identity();
        for (int i = 1; i < n - 1; ++i) F = F * rep.m[i];

        // tr(M1 F) = a_n restricted to M1 = [[s,t],[u,a1-s]] is the
        // hyperplane L.(s,t,u,1) = 0 in P^3
        std::array<cplx, 4> L = {F.a - F.d, F.c, F.b, a[0] * F.d - a[n - 1]};
        double ln = 0.0;
        int piv = 0;
        for (int i = 0; i < 4; ++i)
            if (std::abs(L[i]) > ln) {
                ln = std::abs(L[i]);
                piv = i;
            }
        double fsc = 1.0 + max_abs_entry(F) * (1.0 + asc);
        if (ln <= 1e-13 * fsc) {
            witness = "trace constraint degenerates to a constant";
            continue;
        }

        // basis of the hyperplane
        std::array<Eigen::Vector4cd, 3> basis;
        {
            int k = 0;
            for (int i = 0; i < 4; ++i) {
                if (i == piv) continue;
                Eigen::Vector4cd b = Eigen::Vector4cd::Unit(i);
                b(piv) = -L[i] / L[piv];
                basis[k++] = b;
            }
        }

        // det = 1 quadric x^2 - a1 x w + w^2 + y z = 0 in (x,y,z,w) = (s,t,u,1)
        Eigen::Matrix4cd Q = Eigen::Matrix4cd::Zero();
        Q(0, 0) = 1.0;
        Q(3, 3) = 1.0;
        Q(0, 3) = Q(3, 0) = -a[0] / 2.0;
        Q(1, 2) = Q(2, 1) = 0.5;

        // bilinear (not hermitian) restriction of the quadric
        Eigen::Matrix3cd C;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                C(i, j) = (basis[i].transpose() * Q * basis[j])(0);

        double cn = C.cwiseAbs().maxCoeff();
        Eigen::Vector3cd p0;
        if (cn <= 1e-13 * fsc) {
            p0 = Eigen::Vector3cd::Unit(0);  // the whole plane lies on the quadric
        } else {
            auto cp = conic_point(C, 1e-14 * cn);
            if (!cp.ok) {
                witness = "conic point scan failed";
                continue;
            }
            p0 = cp.p;
        }

        auto embed = [&](const Eigen::Vector3cd& p) {
            Eigen::Vector4cd v = Eigen::Vector4cd::Zero();
            for (int i = 0; i < 3; ++i) v += p(i) * basis[i];
            return v;
        };
        auto on_conic = [&](const Eigen::Vector3cd& p) {
            cplx q = (p.transpose() * C * p)(0);
            return std::abs(q) <= 1e-9 * std::max(cn, 1.0) * p.squaredNorm();
        };

        bool placed = false;
        Eigen::Vector4cd v;
        Eigen::Vector4cd v0 = embed(p0);
        if (std::abs(v0(3)) > 1e-9 * v0.norm()) {
            v = v0;
            placed = true;
        } else {
            // chord through p0: second intersection at
            // theta = -2 b(p0,q) / q(q)
            for (int t = 0; t < 8 && !placed; ++t) {
                Eigen::Vector3cd q(rng.box(-1, 1, -1, 1), rng.box(-1, 1, -1, 1),
                                   rng.box(-1, 1, -1, 1));
                cplx qq = (q.transpose() * C * q)(0);
                if (std::abs(qq) <= 1e-13 * std::max(cn, 1.0)) continue;
                cplx bp = (p0.transpose() * C * q)(0);
                Eigen::Vector3cd p = p0 - (2.0 * bp / qq) * q;
                if (!on_conic(p)) continue;
                Eigen::Vector4cd w = embed(p);
                if (std::abs(w(3)) > 1e-9 * w.norm()) {
                    v = w;
                    placed = true;
                }
            }
        }
        if (!placed) {
            witness = "every conic point found lies at infinity of the (s,t,u) chart";
            continue;
        }

        cplx s = v(0) / v(3), t = v(1) / v(3), u = v(2) / v(3);
        rep.m[0] = Mat2{s, t, u, a[0] - s};

        // self-verification of all trace constraints
        double msc = 1.0;
        for (const auto& m : rep.m) msc = std::max(msc, max_abs_entry(m));
        double vtol = 1e-10 * msc * msc;
        bool good = std::abs(det(rep.m[0]) - 1.0) <= vtol;
        for (int i = 0; i < n - 1 && good; ++i)
            good = std::abs(tr(rep.m[i]) - a[i]) <= vtol;
        Mat2 full = rep.m[0] * F;
        if (good) good = std::abs(tr(full) - a[n - 1]) <= vtol;
        if (good) return rep;
        witness = "solved point failed trace verification";
    }
    throw undetermined_error("fiber sampling budget exhausted: " + witness);
}

MultiaffineReport multiaffine_check(const RepTuple& rep, int index,
                                    const std::vector<cplx>& probes, double h,
                                    bool squared) {
    int k = static_cast<int>(rep.m.size());
    if (index < 1 || index > k)
        throw validation_error("probe index out of range");
    MultiaffineReport rpt;
    auto g = [&](int slot, cplx val) {
        Mat2 mod = rep.m[index - 1];
        (slot == 0 ? mod.a : slot == 1 ? mod.b : slot == 2 ? mod.c : mod.d) = val;
        Mat2 prod = Mat2::identity();
        for (int i = 0; i < k; ++i) prod = prod * (i == index - 1 ? mod : rep.m[i]);
        cplx t = tr(prod);
        if (squared) t *= t;
        rpt.scale = std::max(rpt.scale, std::abs(t));
        return t;
    };
    for (int slot = 0; slot < 4; ++slot)
        for (cplx s : probes) {
            cplx d2 = g(slot, s + h) - 2.0 * g(slot, s) + g(slot, s - h);
            rpt.max_second_difference = std::max(rpt.max_second_difference, std::abs(d2));
        }
    return rpt;
}

RepTuple braid_act(const RepTuple& rep, int k, bool inverted) {
    int nm = static_cast<int>(rep.m.size());
    if (k < 1 || k > nm - 1)
        throw validation_error("braid generator index out of range");
    RepTuple out = rep;
    const Mat2& A = rep.m[k - 1];
    const Mat2& B = rep.m[k];
    if (!inverted) {
        out.m[k - 1] = A * B * inverse(A);
        out.m[k] = A;
    } else {
        out.m[k - 1] = B;
        out.m[k] = inverse(B) * A * B;
    }
    return out;
}

} // namespace isomon
