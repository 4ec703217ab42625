#include "isomon/monodromy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>

#include "isomon/errors.hpp"
#include "isomon/parallel.hpp"

namespace isomon {

namespace {

double clampd(double x, double lo, double hi) { return std::min(hi, std::max(lo, x)); }

} // namespace

cplx Segment::at(double tau) const {
    if (!arc) return a + tau * (b - a);
    return center + radius * std::exp(cplx(0.0, theta0 + tau * dtheta));
}

cplx Segment::velocity(double tau) const {
    if (!arc) return b - a;
    return radius * cplx(0.0, dtheta) * std::exp(cplx(0.0, theta0 + tau * dtheta));
}

Segment Segment::chord(cplx from, cplx to) {
    Segment s;
    s.a = from;
    s.b = to;
    return s;
}

Segment Segment::circle_arc(cplx center, double radius, double theta0, double dtheta) {
    Segment s;
    s.arc = true;
    s.center = center;
    s.radius = radius;
    s.theta0 = theta0;
    s.dtheta = dtheta;
    return s;
}

cplx Path::start() const { return segs.empty() ? cplx{} : segs.front().start(); }
cplx Path::end() const { return segs.empty() ? cplx{} : segs.back().end(); }

bool Path::closed(double tol) const {
    return !segs.empty() && std::abs(start() - end()) <= tol;
}

Path Path::reversed() const {
    Path r;
    r.segs.reserve(segs.size());
    for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
        Segment s = *it;
        if (s.arc) {
            s.theta0 = it->theta0 + it->dtheta;
            s.dtheta = -it->dtheta;
        } else {
            std::swap(s.a, s.b);
        }
        r.segs.push_back(s);
    }
    return r;
}

void Path::append(const Path& other) {
    segs.insert(segs.end(), other.segs.begin(), other.segs.end());
}

double winding_number(const Path& p, cplx point) {
    double total = 0.0;
    for (const Segment& s : p.segs) {
        if (s.arc && std::abs(s.center - point) < 1e-14 * (1.0 + s.radius)) {
            total += s.dtheta;
            continue;
        }
        // split until each piece subtends less than pi, then principal args
        // of endpoint ratios add up exactly
        int pieces = s.arc ? std::max(1, static_cast<int>(std::ceil(std::abs(s.dtheta) / 1.5)))
                           : 1;
        cplx prev = s.at(0.0) - point;
        for (int k = 1; k <= pieces; ++k) {
            cplx cur = s.at(static_cast<double>(k) / pieces) - point;
            total += std::arg(cur / prev);
            prev = cur;
        }
    }
    return total / (2.0 * PI);
}

namespace {

// stem from the basepoint to the entry of the circle around points[i],
// detouring around any other point that comes within 1.2 x radius
Path stem_with_detours(const std::vector<cplx>& pts, const std::vector<int>& fan_pos,
                       int i, cplx b, cplx entry, double rho) {
    const double R = 1.2 * rho;
    const cplx u = entry - b;
    const double ulen2 = std::norm(u);

    struct Detour {
        double tau_in, tau_out;
        cplx z_in, z_out;
        int j;
    };
    std::vector<Detour> ds;
    for (int j = 0; j < static_cast<int>(pts.size()); ++j) {
        if (j == i) continue;
        const cplx w = pts[j] - b;
        const double tau_f = (w.real() * u.real() + w.imag() * u.imag()) / ulen2;
        if (tau_f <= 0.0 || tau_f >= 1.0) continue;
        const double dist = std::abs(w - tau_f * u);
        if (dist >= R) continue;
        const double half = std::sqrt(R * R - dist * dist) / std::sqrt(ulen2);
        Detour d;
        d.tau_in = tau_f - half;
        d.tau_out = tau_f + half;
        d.j = j;
        d.z_in = pts[j] + R * ((b + d.tau_in * u - pts[j]) / std::abs(b + d.tau_in * u - pts[j]));
        d.z_out = pts[j] + R * ((b + d.tau_out * u - pts[j]) / std::abs(b + d.tau_out * u - pts[j]));
        ds.push_back(d);
    }
    std::sort(ds.begin(), ds.end(),
              [](const Detour& x, const Detour& y) { return x.tau_in < y.tau_in; });

    Path path;
    cplx cursor = b;
    for (const Detour& d : ds) {
        path.segs.push_back(Segment::chord(cursor, d.z_in));
        const double th_in = std::arg(d.z_in - pts[d.j]);
        const double th_out = std::arg(d.z_out - pts[d.j]);
        double d_ccw = th_out - th_in;
        while (d_ccw <= 0.0) d_ccw += 2.0 * PI;
        while (d_ccw > 2.0 * PI) d_ccw -= 2.0 * PI;
        // obstacle earlier in the fan stays on the left of the stem, later
        // on the right; pick the arc whose midpoint lies on the other side
        const bool keep_left = fan_pos[d.j] < fan_pos[i];
        const cplx mid_ccw = pts[d.j] + R * std::exp(cplx(0.0, th_in + 0.5 * d_ccw));
        const double side = (std::conj(u) * (mid_ccw - pts[d.j])).imag();
        const bool ccw_is_right = side < 0.0;
        const double dtheta = (keep_left == ccw_is_right) ? d_ccw : d_ccw - 2.0 * PI;
        path.segs.push_back(Segment::circle_arc(pts[d.j], R, th_in, dtheta));
        cursor = d.z_out;
    }
    path.segs.push_back(Segment::chord(cursor, entry));
    return path;
}

} // namespace

LoopBasis canonical_loops(const std::vector<cplx>& points, std::optional<cplx> basepoint) {
    const int m = static_cast<int>(points.size());
    if (m == 0) throw validation_error("no marked points to encircle");

    double gap = m == 1 ? 1.0 : std::numeric_limits<double>::infinity();
    double diam = 0.0;
    double scale = 1.0;
    for (int i = 0; i < m; ++i) {
        scale = std::max(scale, std::abs(points[i]));
        for (int j = i + 1; j < m; ++j) {
            const double d = std::abs(points[i] - points[j]);
            gap = std::min(gap, d);
            diam = std::max(diam, d);
        }
    }
    const double rho = 0.1 * gap;
    if (rho < 1e-8 * scale)
        throw numerical_error("safety radius underflow: marked points closer than 1e-7 x scale");

    LoopBasis lb;
    lb.points = points;
    lb.radius = rho;
    const double spread = std::max(diam, 1.0);
    if (basepoint) {
        lb.basepoint = *basepoint;
        for (const cplx& t : points)
            if (std::abs(*basepoint - t) < 2.0 * rho)
                throw validation_error("basepoint too close to a marked point");
    } else {
        double re_mean = 0.0, im_min = points[0].imag();
        for (const cplx& t : points) {
            re_mean += t.real();
            im_min = std::min(im_min, t.imag());
        }
        re_mean /= m;
        // small horizontal offset so no two points line up vertically with
        // the basepoint in generic input
        lb.basepoint = cplx(re_mean + 0.0131 * spread, im_min - 2.0 * spread);
    }
    const cplx b = lb.basepoint;

    // fan order: descending argument as seen from the basepoint, i.e. left
    // to right for a basepoint below the cluster
    lb.fan.resize(m);
    std::iota(lb.fan.begin(), lb.fan.end(), 0);
    std::vector<double> ang(m);
    for (int i = 0; i < m; ++i) ang[i] = std::arg(points[i] - b);
    std::stable_sort(lb.fan.begin(), lb.fan.end(),
                     [&](int i, int j) { return ang[i] > ang[j]; });
    std::vector<int> fan_pos(m);
    for (int k = 0; k < m; ++k) fan_pos[lb.fan[k]] = k;

    for (int k = 0; k < m; ++k) {
        const int i = lb.fan[k];
        const cplx t = points[i];
        const cplx dir = (b - t) / std::abs(b - t);
        const cplx entry = t + rho * dir;
        Path out = stem_with_detours(points, fan_pos, i, b, entry, rho);
        Path loop = out;
        loop.segs.push_back(Segment::circle_arc(t, rho, std::arg(entry - t), 2.0 * PI));
        loop.append(out.reversed());
        lb.lassos.push_back(std::move(loop));
    }

    // combinatorial check: each lasso winds once around its own point and
    // zero times around every other
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < m; ++j) {
            const double w = winding_number(lb.lassos[k], points[j]);
            const double want = j == lb.fan[k] ? 1.0 : 0.0;
            if (std::abs(w - want) > 0.01)
                throw numerical_error("lasso construction failed its winding check");
        }
    }

    // adjacent regroupings rewriting fan order into caller order
    std::vector<int> order = lb.fan;
    bool swapped = true;
    while (swapped) {
        swapped = false;
        for (int k = 0; k + 1 < m; ++k) {
            if (order[k] > order[k + 1]) {
                std::swap(order[k], order[k + 1]);
                lb.moves.push_back(k);
                swapped = true;
            }
        }
    }
    return lb;
}

namespace {

// Dormand-Prince 5(4) pair
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;

using State = std::array<cplx, 5>;  // Y entries row-major, then integrated trace

struct SegmentIntegrator {
    const FuchsianSystem& sys;
    const Segment& seg;
    double pole_floor;

    void rhs(double tau, const State& y, State& out) const {
        const cplx z = seg.at(tau);
        const cplx v = seg.velocity(tau);
        for (int i : sys.finite_indices())
            if (std::abs(z - sys.poles[i].z) < pole_floor)
                throw numerical_error("transport path passes through a pole");
        const Mat2 B = sys.rhs(z);
        out[0] = v * (B.a * y[0] + B.b * y[2]);
        out[1] = v * (B.a * y[1] + B.b * y[3]);
        out[2] = v * (B.c * y[0] + B.d * y[2]);
        out[3] = v * (B.c * y[1] + B.d * y[3]);
        out[4] = v * (B.a + B.d);
    }
};

void integrate_segment(const FuchsianSystem& sys, const Segment& seg, State& y,
                       const TransportOptions& opt, TransportResult& rep) {
    SegmentIntegrator f{sys, seg, 1e-12 * sys.scale()};
    double tau = 0.0;
    double h = clampd(opt.initial_step, 1e-6, 1.0);
    double errold = 1e-4;
    long steps = 0;
    State k1, k2, k3, k4, k5, k6, k7, yt, y5;

    while (1.0 - tau > 1e-14) {
        h = std::min(h, 1.0 - tau);
        f.rhs(tau, y, k1);
        for (int i = 0; i < 5; ++i) yt[i] = y[i] + h * A21 * k1[i];
        f.rhs(tau + C2 * h, yt, k2);
        for (int i = 0; i < 5; ++i) yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        f.rhs(tau + C3 * h, yt, k3);
        for (int i = 0; i < 5; ++i)
            yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        f.rhs(tau + C4 * h, yt, k4);
        for (int i = 0; i < 5; ++i)
            yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        f.rhs(tau + C5 * h, yt, k5);
        for (int i = 0; i < 5; ++i)
            yt[i] = y[i] +
                    h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        f.rhs(tau + h, yt, k6);
        for (int i = 0; i < 5; ++i)
            y5[i] = y[i] +
                    h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        f.rhs(tau + h, y5, k7);

        double err2 = 0.0;
        for (int i = 0; i < 5; ++i) {
            const cplx e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] +
                                E6 * k6[i] + E7 * k7[i]);
            const double sc = opt.tol * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
            err2 += std::norm(e) / (sc * sc);
        }
        const double err = std::sqrt(err2 / 5.0);

        if (std::isfinite(err) && err <= 1.0) {
            tau += h;
            y = y5;
            rep.step_error = std::max(rep.step_error, err * opt.tol);
            const double fac = clampd(0.9 * std::pow(std::max(err, 1e-16), -0.17) *
                                          std::pow(errold, 0.04),
                                      0.2, 10.0);
            h = std::min(h * fac, 1.0);
            errold = std::max(err, 1e-4);
        } else {
            const double fac =
                std::isfinite(err) ? clampd(0.9 * std::pow(err, -0.2), 0.1, 0.9) : 0.1;
            h *= fac;
        }
        if (h < 1e-14)
            throw numerical_error("step size underflow during transport");
        if (++steps > opt.max_steps)
            throw numerical_error("transport step budget exhausted");
    }
    rep.steps += steps;
}

} // namespace

TransportResult transport(const FuchsianSystem& sys, const Path& path,
                          const TransportOptions& opt) {
    TransportResult rep;
    State y{cplx(1.0), cplx(0.0), cplx(0.0), cplx(1.0), cplx(0.0)};
    for (const Segment& s : path.segs) integrate_segment(sys, s, y, opt, rep);
    rep.value = Mat2{y[0], y[1], y[2], y[3]};
    const cplx expected_det = std::exp(y[4]);
    rep.det_drift =
        std::abs(det(rep.value) - expected_det) / std::max(1.0, std::abs(expected_det));
    if (rep.det_drift > 100.0 * opt.tol)
        throw numerical_error("transport determinant drifted from the integrated trace");
    return rep;
}

MonodromyRep compute_monodromy(const ParabolicConnection& c, const LoopBasis& loops,
                               double tol, double vtol, int jobs) {
    const std::vector<int> finite = c.sys.finite_indices();
    const int m = static_cast<int>(finite.size());
    if (static_cast<int>(loops.points.size()) != m)
        throw validation_error("loop basis does not cover the finite poles");
    const double sc = c.sys.scale();
    for (int k = 0; k < m; ++k)
        if (std::abs(loops.points[k] - c.sys.poles[finite[k]].z) > 1e-12 * sc)
            throw validation_error("loop basis marked points do not match the system");

    MonodromyRep rep;
    rep.basepoint = loops.basepoint;

    std::vector<Mat2> mats(m);
    std::vector<double> serr(m, 0.0), ddrift(m, 0.0);
    std::vector<std::string> failures(m);
    TransportOptions opt;
    opt.tol = tol;
    parallel_for(m, jobs, [&](int k) {
        try {
            TransportResult t = transport(c.sys, loops.lassos[k], opt);
            mats[k] = t.value;
            serr[k] = t.step_error;
            ddrift[k] = t.det_drift;
        } catch (const isomon_error& e) {
            failures[k] = e.what();
        }
    });
    for (int k = 0; k < m; ++k)
        if (!failures[k].empty()) throw numerical_error(failures[k]);
    rep.step_error = *std::max_element(serr.begin(), serr.end());
    rep.det_drift = *std::max_element(ddrift.begin(), ddrift.end());

    // rewrite fan order into caller order
    for (int k : loops.moves) {
        const Mat2 g = mats[k];
        mats[k] = g * mats[k + 1] * inverse(g);
        mats[k + 1] = g;
    }

    rep.m = std::move(mats);
    rep.pole_index = finite;
    if (auto inf = c.sys.infinity_index()) {
        Mat2 prod = Mat2::identity();
        for (const Mat2& M : rep.m) prod = prod * M;
        rep.m.push_back(inverse(prod));
        rep.pole_index.push_back(*inf);
    }

    const int n = static_cast<int>(rep.m.size());
    Mat2 prod = Mat2::identity();
    for (int k = 0; k < n; ++k) {
        prod = prod * rep.m[k];
        const double det_dev = std::abs(det(rep.m[k]) - 1.0);
        if (det_dev > vtol)
            throw numerical_error("monodromy determinant violates |det - 1| <= vtol; "
                                  "tighten the transport tolerance");
        const cplx want = 2.0 * std::cos(2.0 * PI * c.lambda[rep.pole_index[k]]);
        rep.trace_error = std::max(rep.trace_error, std::abs(tr(rep.m[k]) - want));
    }
    rep.relation_error = fnorm(prod - Mat2::identity());
    if (rep.relation_error > vtol)
        throw numerical_error("monodromy product relation violated beyond vtol; "
                              "tighten the transport tolerance");
    if (rep.trace_error > vtol)
        throw numerical_error("monodromy trace disagrees with the marked exponents "
                              "beyond vtol; tighten the transport tolerance");
    return rep;
}

MonodromyRep compute_monodromy(const ParabolicConnection& c, double tol, double vtol,
                               int jobs) {
    std::vector<cplx> pts;
    for (int i : c.sys.finite_indices()) pts.push_back(c.sys.poles[i].z);
    return compute_monodromy(c, canonical_loops(pts), tol, vtol, jobs);
}

TraceCoordinates riemann_hilbert(const ParabolicConnection& c, double tol, double vtol,
                                 int jobs) {
    const MonodromyRep rep = compute_monodromy(c, tol, vtol, jobs);
    RepTuple tuple;
    tuple.m.assign(rep.m.begin(), rep.m.end() - 1);
    TraceCoordinates tc = invariant_fingerprint(tuple);
    std::vector<cplx> ordered;
    for (int idx : rep.pole_index) ordered.push_back(c.lambda[idx]);
    tc.a = mu_map(ordered);
    return tc;
}

} // namespace isomon
