#include "isomon/transformations.hpp"

#include <cmath>
#include <utility>

#include "isomon/errors.hpp"

namespace isomon {

namespace {

template <class S>
S from_rat(const Rat& q);
template <>
cplx from_rat<cplx>(const Rat& q) {
    return cplx(to_double(q));
}
template <>
Rat from_rat<Rat>(const Rat& q) {
    return q;
}

} // namespace

template <class S>
BookkeepingDelta<S> elm_bookkeeping(const TransformKind& kind, const std::vector<S>& lambda,
                                    const std::vector<long>& mu, long deg_line) {
    const int n = static_cast<int>(lambda.size());
    if (static_cast<int>(mu.size()) != n)
        throw validation_error("lambda and mu must have matching lengths");
    BookkeepingDelta<S> out{kind, lambda, mu, deg_line};
    switch (kind.tag) {
        case TransformKind::elm_minus: {
            if (kind.index < 0 || kind.index >= n)
                throw validation_error("pole index out of range");
            const int i = kind.index;
            out.lambda[i] = from_rat<S>(rat(1 + mu[i])) - lambda[i];
            out.mu[i] = mu[i] + 1;
            out.deg_line = deg_line - 1;
            break;
        }
        case TransformKind::elm_plus: {
            if (kind.index < 0 || kind.index >= n)
                throw validation_error("pole index out of range");
            const int i = kind.index;
            out.lambda[i] = from_rat<S>(rat(mu[i])) - lambda[i];
            out.mu[i] = mu[i] - 1;
            out.deg_line = deg_line + 1;
            break;
        }
        case TransformKind::tensor: {
            if (static_cast<int>(kind.nu.size()) != n)
                throw validation_error("tensor shift must have one entry per pole");
            for (int i = 0; i < n; ++i) {
                const Rat two_nu = 2 * kind.nu[i];
                if (two_nu.get_den() != 1)
                    throw validation_error("tensor shift must be half-integral");
                out.lambda[i] = lambda[i] + from_rat<S>(kind.nu[i]);
                out.mu[i] = mu[i] + two_nu.get_num().get_si();
            }
            out.deg_line = deg_line + 2 * kind.deg_l1;
            break;
        }
        case TransformKind::swap_line: {
            if (kind.index < 0 || kind.index >= n)
                throw validation_error("pole index out of range");
            const int i = kind.index;
            out.lambda[i] = from_rat<S>(rat(mu[i])) - lambda[i];
            break;
        }
    }
    return out;
}

template BookkeepingDelta<cplx> elm_bookkeeping<cplx>(const TransformKind&,
                                                      const std::vector<cplx>&,
                                                      const std::vector<long>&, long);
template BookkeepingDelta<Rat> elm_bookkeeping<Rat>(const TransformKind&,
                                                    const std::vector<Rat>&,
                                                    const std::vector<long>&, long);

ParabolicConnection swap_parabolic(const ParabolicConnection& c, int i) {
    if (i < 0 || i >= c.n()) throw validation_error("pole index out of range");
    ParabolicConnection out = c;
    const cplx target = cplx(static_cast<double>(c.mu[i])) - c.lambda[i];
    if (std::abs(target - c.lambda[i]) <= 1e-12 * (1.0 + std::abs(c.lambda[i])))
        return out;  // resonant pole: both exponents coincide
    const std::pair<cplx, Line> displaced{c.lambda[i], c.lines[i]};
    if (c.alt[i]) {
        out.lambda[i] = c.alt[i]->first;
        out.lines[i] = c.alt[i]->second;
    } else {
        const Mat2& a = c.sys.residues[i];
        if (is_scalar(a, 1e-12))
            throw undetermined_error(
                "complementary eigenline indeterminate: residue is nearly scalar");
        out.lambda[i] = target;
        out.lines[i] = eigenline(a, target);
    }
    out.alt[i] = displaced;
    return out;
}

Mat2 GaugeTransformation::at(cplx z) const {
    return (1.0 / eval(den, z)) * (n0 + z * n1);
}

SchlesingerResult schlesinger_transform(const ParabolicConnection& c, int i, int j) {
    const int n = c.n();
    if (i < 0 || i >= n || j < 0 || j >= n || i == j)
        throw validation_error("schlesinger gauge needs two distinct poles");
    if (c.sys.poles[i].at_infinity || c.sys.poles[j].at_infinity)
        throw validation_error("schlesinger gauge needs finite poles");

    const cplx ti = c.sys.poles[i].z, tj = c.sys.poles[j].z;
    const cplx ki = cplx(static_cast<double>(c.mu[i])) - c.lambda[i];
    const cplx kj = cplx(static_cast<double>(c.mu[j])) - c.lambda[j];
    const Line wl = eigenline(c.sys.residues[i], ki);
    const Line vl = eigenline(c.sys.residues[j], kj);
    if (line_distance(wl, vl) <= 1e-12)
        throw numerical_error(
            "gauge projector degenerate: complementary eigenlines at the two poles coincide");

    // rank-1 projector with image along wl and kernel along vl
    const cplx denom = vl.v * wl.u - vl.u * wl.v;
    const Mat2 P = (1.0 / denom) *
                   Mat2{wl.u * vl.v, -wl.u * vl.u, wl.v * vl.v, -wl.v * vl.u};
    const Mat2 Q = Mat2::identity() - P;
    const cplx cc = tj - ti;

    auto holo_rest = [&](int at) {
        Mat2 r = Mat2::zero();
        for (int k : c.sys.finite_indices())
            if (k != at)
                r += (1.0 / (c.sys.poles[at].z - c.sys.poles[k].z)) * c.sys.residues[k];
        return r;
    };

    FuchsianSystem sys2 = c.sys;
    const Mat2& ai = c.sys.residues[i];
    const Mat2& aj = c.sys.residues[j];
    sys2.residues[i] = Q * ai + ki * P + P + (ti - tj) * (Q * (holo_rest(i) * P));
    sys2.residues[j] = aj * Q + P * aj * P + cc * (P * (holo_rest(j) * Q)) - P;
    for (int k : c.sys.finite_indices()) {
        if (k == i || k == j) continue;
        const Mat2 g = Mat2::identity() + (cc / (c.sys.poles[k].z - tj)) * P;
        sys2.residues[k] = g * c.sys.residues[k] * inverse(g);
    }

    SchlesingerResult out;
    out.conn.sys = std::move(sys2);
    out.conn.lambda = c.lambda;
    out.conn.mu = c.mu;
    out.conn.deg_line = c.deg_line;
    out.conn.lambda[i] = cplx(static_cast<double>(1 + c.mu[i])) - c.lambda[i];
    out.conn.lambda[j] = kj;
    out.conn.mu[i] = c.mu[i] + 1;
    out.conn.mu[j] = c.mu[j] - 1;
    out.conn.lines = c.lines;
    out.conn.lines[i] = eigenline(out.conn.sys.residues[i], out.conn.lambda[i]);
    out.conn.lines[j] = eigenline(out.conn.sys.residues[j], out.conn.lambda[j]);
    for (int k : c.sys.finite_indices()) {
        if (k == i || k == j) continue;
        const Mat2 g = Mat2::identity() + (cc / (c.sys.poles[k].z - tj)) * P;
        out.conn.lines[k] = apply(g, c.lines[k]);
    }
    out.conn.alt.assign(n, std::nullopt);

    out.gauge.n1 = Mat2::identity();
    out.gauge.n0 = (-tj) * Mat2::identity() + cc * P;
    out.gauge.den = {-tj, cplx(1.0)};
    out.gauge.i = i;
    out.gauge.j = j;
    return out;
}

AffineMapOnLambda AffineMapOnLambda::identity(int n) {
    AffineMapOnLambda m;
    m.linear.assign(n, RatVec(n, rat(0)));
    for (int k = 0; k < n; ++k) m.linear[k][k] = rat(1);
    m.shift.assign(n, rat(0));
    return m;
}

RatVec AffineMapOnLambda::operator()(const RatVec& x) const {
    const int m = n();
    if (static_cast<int>(x.size()) != m)
        throw validation_error("exponent vector length mismatch");
    RatVec y(m, rat(0));
    for (int r = 0; r < m; ++r) {
        Rat acc = shift[r];
        for (int k = 0; k < m; ++k) acc += linear[r][k] * x[k];
        y[r] = acc;
    }
    return y;
}

std::vector<cplx> AffineMapOnLambda::operator()(const std::vector<cplx>& x) const {
    const int m = n();
    if (static_cast<int>(x.size()) != m)
        throw validation_error("exponent vector length mismatch");
    std::vector<cplx> y(m);
    for (int r = 0; r < m; ++r) {
        cplx acc = to_double(shift[r]);
        for (int k = 0; k < m; ++k) acc += to_double(linear[r][k]) * x[k];
        y[r] = acc;
    }
    return y;
}

AffineMapOnLambda AffineMapOnLambda::after(const AffineMapOnLambda& g) const {
    const int m = n();
    if (g.n() != m) throw validation_error("affine map size mismatch");
    AffineMapOnLambda out;
    out.linear.assign(m, RatVec(m, rat(0)));
    out.shift = shift;
    for (int r = 0; r < m; ++r) {
        for (int k = 0; k < m; ++k) {
            Rat acc = 0;
            for (int s = 0; s < m; ++s) acc += linear[r][s] * g.linear[s][k];
            out.linear[r][k] = acc;
        }
        for (int s = 0; s < m; ++s) out.shift[r] += linear[r][s] * g.shift[s];
    }
    return out;
}

bool AffineMapOnLambda::operator==(const AffineMapOnLambda& o) const {
    return linear == o.linear && shift == o.shift;
}

AffineMapOnLambda weyl_generator(int k) {
    if (k < 0 || k > 4) throw validation_error("reflection index out of range");
    AffineMapOnLambda m = AffineMapOnLambda::identity(4);
    if (k >= 1) {
        m.linear[k - 1][k - 1] = rat(-1);
        return m;
    }
    for (int r = 0; r < 4; ++r) {
        for (int s = 0; s < 4; ++s) m.linear[r][s] -= rat(1, 2);
        m.shift[r] = rat(1, 2);
    }
    return m;
}

namespace {

template <class V>
V weyl_apply_impl(const std::vector<int>& word, const V& lambda) {
    V cur = lambda;
    for (int k : word) cur = weyl_generator(k)(cur);
    return cur;
}

} // namespace

RatVec weyl_apply(const std::vector<int>& word, const RatVec& lambda) {
    return weyl_apply_impl(word, lambda);
}

std::vector<cplx> weyl_apply(const std::vector<int>& word, const std::vector<cplx>& lambda) {
    return weyl_apply_impl(word, lambda);
}

AffineMapOnLambda bl_generator(const BlGenerator& g, int n) {
    if (n < 1) throw validation_error("need at least one pole");
    auto in_range = [n](int k) { return k >= 0 && k < n; };
    AffineMapOnLambda m = AffineMapOnLambda::identity(n);
    switch (g.kind) {
        case BlGenerator::add_one:
            if (!in_range(g.i)) throw validation_error("pole index out of range");
            m.shift[g.i] = rat(1);
            break;
        case BlGenerator::add_half_pair:
            if (!in_range(g.i) || !in_range(g.j) || g.i == g.j)
                throw validation_error("pair shift needs two distinct poles");
            m.shift[g.i] = rat(1, 2);
            m.shift[g.j] = rat(1, 2);
            break;
        case BlGenerator::flip_pair:
            if (!in_range(g.i) || !in_range(g.j) || g.i == g.j)
                throw validation_error("pair flip needs two distinct poles");
            m.linear[g.i][g.i] = rat(-1);
            m.linear[g.j][g.j] = rat(-1);
            m.shift[g.i] = g.i == n - 1 ? rat(3, 2) : rat(1, 2);
            m.shift[g.j] = g.j == n - 1 ? rat(3, 2) : rat(1, 2);
            break;
        case BlGenerator::flip_one:
            if (!in_range(g.i)) throw validation_error("pole index out of range");
            m.linear[g.i][g.i] = rat(-1);
            if (g.i == n - 1) m.shift[g.i] = rat(1);
            break;
    }
    return m;
}

RatVec bl_apply(const BlGenerator& g, const RatVec& lambda) {
    return bl_generator(g, static_cast<int>(lambda.size()))(lambda);
}

std::vector<cplx> bl_apply(const BlGenerator& g, const std::vector<cplx>& lambda) {
    return bl_generator(g, static_cast<int>(lambda.size()))(lambda);
}

} // namespace isomon
