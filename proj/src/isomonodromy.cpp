#include "isomon/isomonodromy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "isomon/character_variety.hpp"
#include "isomon/errors.hpp"
#include "isomon/poly.hpp"

namespace isomon {

namespace {

double clampd(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

// worst eigenvalue distance under the better of the two pairings
double spectrum_distance(const Mat2& x, const Mat2& y) {
    const auto ex = eigenvalues(x);
    const auto ey = eigenvalues(y);
    const double direct = std::max(std::abs(ex[0] - ey[0]), std::abs(ex[1] - ey[1]));
    const double crossed = std::max(std::abs(ex[0] - ey[1]), std::abs(ex[1] - ey[0]));
    return std::min(direct, crossed);
}

// dA_i/ds = sum over j != i of (v_j - v_i) [A_i, A_j] / (t_i - t_j).  The
// commutator order is pinned by the defining property: integrating this
// field keeps the monodromy fingerprint constant (the reversed order is the
// anti-isomonodromic flow and fails the invariance check by orders of
// magnitude).  The pairwise terms cancel in the sum, so sum A_i is conserved
// exactly.
std::vector<Mat2> rhs_at(const std::vector<SpherePoint>& poles, const std::vector<Mat2>& a,
                         const std::vector<cplx>& velocity) {
    const int n = static_cast<int>(poles.size());
    std::vector<Mat2> d(n, Mat2::zero());
    for (int i = 0; i < n; ++i) {
        if (poles[i].at_infinity) continue;
        for (int j = i + 1; j < n; ++j) {
            if (poles[j].at_infinity) continue;
            const cplx w = (velocity[j] - velocity[i]) / (poles[i].z - poles[j].z);
            if (w == cplx(0.0)) continue;
            const Mat2 term = w * commutator(a[i], a[j]);
            d[i] += term;
            d[j] -= term;
        }
    }
    return d;
}

void check_state(const FuchsianSystem& state) {
    const int n = state.n();
    if (n == 0) throw validation_error("empty system");
    if (static_cast<int>(state.residues.size()) != n)
        throw validation_error("residue count does not match the pole count");
    const double sc = state.scale();
    const auto fin = state.finite_indices();
    for (size_t p = 0; p < fin.size(); ++p)
        for (size_t q = p + 1; q < fin.size(); ++q)
            if (std::abs(state.poles[fin[p]].z - state.poles[fin[q]].z) <= 1e-12 * sc)
                throw validation_error("coincident poles");
}

std::vector<cplx> path_velocity(const FuchsianSystem& state, const FlowPath& path) {
    if (path.moving.size() != path.displacement.size())
        throw validation_error("one displacement per moving pole required");
    std::vector<cplx> v(state.n(), cplx(0.0));
    std::vector<bool> seen(state.n(), false);
    for (size_t q = 0; q < path.moving.size(); ++q) {
        const int k = path.moving[q];
        if (k < 0 || k >= state.n()) throw validation_error("moving pole index out of range");
        if (state.poles[k].at_infinity)
            throw validation_error("the pole at infinity cannot move");
        if (seen[k]) throw validation_error("duplicate moving pole index");
        seen[k] = true;
        v[k] = path.displacement[q];
    }
    return v;
}

std::vector<SpherePoint> poles_at(const FuchsianSystem& initial, const FlowPath& path,
                                  double s) {
    std::vector<SpherePoint> poles = initial.poles;
    for (size_t q = 0; q < path.moving.size(); ++q)
        poles[path.moving[q]].z += s * path.displacement[q];
    return poles;
}

double min_finite_gap(const FuchsianSystem& sys, const std::vector<SpherePoint>& poles) {
    double gap = std::numeric_limits<double>::infinity();
    const auto fin = sys.finite_indices();
    for (size_t p = 0; p < fin.size(); ++p)
        for (size_t q = p + 1; q < fin.size(); ++q)
            gap = std::min(gap, std::abs(poles[fin[p]].z - poles[fin[q]].z));
    return gap;
}

// Dormand-Prince 5(4) tableau
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

struct FlowIntegrator {
    const FuchsianSystem& initial;
    const FlowPath& path;
    std::vector<cplx> velocity;
    double radius;  // collision safety radius

    using State = std::vector<cplx>;

    static State pack(const std::vector<Mat2>& a) {
        State y(4 * a.size());
        for (size_t i = 0; i < a.size(); ++i) {
            y[4 * i] = a[i].a;
            y[4 * i + 1] = a[i].b;
            y[4 * i + 2] = a[i].c;
            y[4 * i + 3] = a[i].d;
        }
        return y;
    }

    std::vector<Mat2> unpack(const State& y) const {
        std::vector<Mat2> a(y.size() / 4);
        for (size_t i = 0; i < a.size(); ++i)
            a[i] = Mat2{y[4 * i], y[4 * i + 1], y[4 * i + 2], y[4 * i + 3]};
        return a;
    }

    void rhs(double s, const State& y, State& out) const {
        const std::vector<SpherePoint> poles = poles_at(initial, path, s);
        if (min_finite_gap(initial, poles) < radius) {
            char buf[96];
            std::snprintf(buf, sizeof buf,
                          "pole collision at s=%.6g: gap below the safety radius", s);
            throw numerical_error(buf);
        }
        out = pack(rhs_at(poles, unpack(y), velocity));
    }
};

} // namespace

std::vector<Mat2> schlesinger_rhs(const SchlesingerState& state,
                                  const std::vector<cplx>& velocity) {
    check_state(state);
    if (static_cast<int>(velocity.size()) != state.n())
        throw validation_error("one velocity entry per pole required");
    for (int i = 0; i < state.n(); ++i)
        if (state.poles[i].at_infinity && velocity[i] != cplx(0.0))
            throw validation_error("the pole at infinity cannot move");
    return rhs_at(state.poles, state.residues, velocity);
}

std::vector<Mat2> schlesinger_rhs(const SchlesingerState& state, int moving) {
    if (moving < 0 || moving >= state.n())
        throw validation_error("moving pole index out of range");
    std::vector<cplx> v(state.n(), cplx(0.0));
    v[moving] = 1.0;
    return schlesinger_rhs(state, v);
}

FlowResult integrate_flow(const SchlesingerState& state, const FlowPath& path,
                          const FlowOptions& opt) {
    check_state(state);
    if (opt.samples < 2) throw validation_error("need at least the two endpoint samples");
    if (!(opt.tol > 0.0)) throw validation_error("tolerance must be positive");

    FlowIntegrator f{state, path, path_velocity(state, path),
                     opt.collision_factor * min_finite_gap(state, state.poles)};

    FlowResult fr;
    fr.initial = state;
    fr.path = path;

    using State = FlowIntegrator::State;
    State y = FlowIntegrator::pack(state.residues);
    const size_t dim = y.size();
    State k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), yt(dim), y5(dim);

    const std::vector<Mat2> a0 = state.residues;
    auto record = [&](double s) {
        const std::vector<Mat2> a = f.unpack(y);
        fr.s.push_back(s);
        fr.residues.push_back(a);
        Mat2 sum0 = Mat2::zero(), sum = Mat2::zero();
        for (int i = 0; i < state.n(); ++i) {
            fr.eig_drift = std::max(fr.eig_drift, spectrum_distance(a0[i], a[i]));
            fr.trace_drift = std::max(fr.trace_drift, std::abs(tr(a[i]) - tr(a0[i])));
            sum0 += a0[i];
            sum += a[i];
        }
        fr.sum_drift = std::max(fr.sum_drift, fnorm(sum - sum0));
    };

    record(0.0);
    double s = 0.0;
    double h = clampd(opt.initial_step, 1e-6, 1.0);
    double errold = 1e-4;
    long steps = 0;
    for (int seg = 1; seg < opt.samples; ++seg) {
        const double s_end = (seg == opt.samples - 1)
                                 ? 1.0
                                 : static_cast<double>(seg) / (opt.samples - 1);
        while (s_end - s > 1e-14) {
            h = std::min(h, s_end - s);
            f.rhs(s, y, k1);
            for (size_t i = 0; i < dim; ++i) yt[i] = y[i] + h * A21 * k1[i];
            f.rhs(s + C2 * h, yt, k2);
            for (size_t i = 0; i < dim; ++i)
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            f.rhs(s + C3 * h, yt, k3);
            for (size_t i = 0; i < dim; ++i)
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            f.rhs(s + C4 * h, yt, k4);
            for (size_t i = 0; i < dim; ++i)
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            f.rhs(s + C5 * h, yt, k5);
            for (size_t i = 0; i < dim; ++i)
                yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] +
                                    A65 * k5[i]);
            f.rhs(s + h, yt, k6);
            for (size_t i = 0; i < dim; ++i)
                y5[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] +
                                    B6 * k6[i]);
            f.rhs(s + h, y5, k7);

            double err2 = 0.0;
            for (size_t i = 0; i < dim; ++i) {
                const cplx e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] +
                                    E6 * k6[i] + E7 * k7[i]);
                const double sc = opt.tol * (1.0 + std::max(std::abs(y[i]), std::abs(y5[i])));
                err2 += std::norm(e) / (sc * sc);
            }
            const double err = std::sqrt(err2 / static_cast<double>(dim));

            if (std::isfinite(err) && err <= 1.0) {
                s += h;
                y = y5;
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
            if (h < 1e-14) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "step size underflow at s=%.6g", s);
                throw numerical_error(buf);
            }
            if (++steps > opt.max_steps)
                throw numerical_error("flow step budget exhausted");
        }
        s = s_end;
        record(s);
    }
    fr.steps = steps;
    return fr;
}

FuchsianSystem flow_system_at(const FlowResult& fr, int sample) {
    if (sample < 0 || sample >= static_cast<int>(fr.s.size()))
        throw validation_error("sample index out of range");
    FuchsianSystem sys = fr.initial;
    sys.poles = poles_at(fr.initial, fr.path, fr.s[sample]);
    sys.residues = fr.residues[sample];
    return sys;
}

DriftReport verify_isomonodromy(const ParabolicConnection& before,
                                const SchlesingerState& after, double tol, double vtol,
                                int jobs) {
    if (after.n() != before.n())
        throw validation_error("the two states must share the pole count");
    const ParabolicConnection cafter =
        make_connection(after, before.lambda, before.mu, before.deg_line);

    auto fingerprint = [&](const ParabolicConnection& c) {
        const MonodromyRep rep = compute_monodromy(c, tol, vtol, jobs);
        RepTuple tuple;
        tuple.m.assign(rep.m.begin(), rep.m.end() - 1);
        return invariant_fingerprint(tuple).flat();
    };

    DriftReport rep;
    rep.before = fingerprint(before);
    rep.after = fingerprint(cafter);
    for (size_t k = 0; k < rep.before.size(); ++k)
        rep.trace_drift = std::max(rep.trace_drift, std::abs(rep.after[k] - rep.before[k]));
    for (int i = 0; i < before.n(); ++i)
        rep.eig_drift = std::max(
            rep.eig_drift, spectrum_distance(before.sys.residues[i], after.residues[i]));
    return rep;
}

std::vector<ApparentSample> apparent_singularity_trajectory(const FlowResult& fr) {
    std::vector<ApparentSample> out;
    cplx prev{};
    bool have_prev = false;
    for (int k = 0; k < static_cast<int>(fr.s.size()); ++k) {
        const FuchsianSystem sys = flow_system_at(fr, k);
        const auto fin = sys.finite_indices();

        double bscale = 0.0, tspan = 1.0;
        for (int i : fin) {
            bscale = std::max(bscale, std::abs(sys.residues[i].b));
            tspan = std::max(tspan, std::abs(sys.poles[i].z));
        }
        Poly num;
        for (int i : fin) {
            std::vector<cplx> others;
            for (int j : fin)
                if (j != i) others.push_back(sys.poles[j].z);
            num = add(num, scale(sys.residues[i].b, from_roots(others)));
        }
        const double floor =
            1e-12 * bscale * std::pow(tspan, std::max<int>(0, static_cast<int>(fin.size()) - 1));
        num = trimmed(num, floor);

        ApparentSample smp;
        smp.s = fr.s[k];
        if (degree(num) >= 1) {
            std::vector<cplx> roots = poly_roots(num);
            auto lex_less = [](cplx a, cplx b) {
                if (a.real() != b.real()) return a.real() < b.real();
                return a.imag() < b.imag();
            };
            cplx best = roots[0];
            for (cplx r : roots) {
                if (have_prev ? (std::abs(r - prev) < std::abs(best - prev))
                              : lex_less(r, best))
                    best = r;
            }
            smp.y = best;
            smp.defined = true;
            prev = best;
            have_prev = true;
        }
        out.push_back(smp);
    }
    return out;
}

} // namespace isomon
