#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "isomon/character_variety.hpp"
#include "isomon/errors.hpp"
#include "isomon/fuchsian.hpp"
#include "isomon/monodromy.hpp"
#include "isomon/rng.hpp"
#include "isomon/transformations.hpp"

using namespace isomon;

namespace {

FuchsianSystem diag_three_pole() {
    FuchsianSystem sys;
    sys.poles = {SpherePoint::finite(0.0), SpherePoint::finite(1.0), SpherePoint::finite(2.0)};
    sys.residues = {Mat2{0.3, 0.0, 0.0, -0.3, true}, Mat2{0.2, 0.0, 0.0, -0.2, true},
                    Mat2{-0.5, 0.0, 0.0, 0.5, true}};
    return sys;
}

// real residues with negative determinant: real exponents, bounded traces
ParabolicConnection tame_four_pole(uint64_t seed) {
    Rng rng(seed);
    FuchsianSystem sys;
    sys.poles = {SpherePoint::finite(0.0), SpherePoint::finite(cplx(1.0, 0.3)),
                 SpherePoint::finite(cplx(2.1, -0.4)), SpherePoint::finite(cplx(3.0, 0.1))};
    Mat2 total = Mat2::zero();
    for (int k = 0; k < 3; ++k) {
        Mat2 a{rng.uniform(0.25, 0.7), rng.uniform(0.25, 0.7), rng.uniform(0.25, 0.7), 0.0};
        a.d = -a.a;
        sys.residues.push_back(a);
        total += a;
    }
    sys.residues.push_back(-total);
    std::vector<cplx> lambda;
    for (const Mat2& a : sys.residues) lambda.push_back(eigenvalues(a)[0]);
    return make_connection(sys, lambda, {0, 0, 0, 0}, 0);
}

RatVec rand_rat_vec(Rng& rng, int n) {
    RatVec v;
    for (int k = 0; k < n; ++k) {
        const long num = static_cast<long>(rng.bits() % 25) - 12;
        const long den = 1 + static_cast<long>(rng.bits() % 8);
        v.push_back(rat(num, den));
    }
    return v;
}

std::vector<cplx> to_doubles(const RatVec& v) {
    std::vector<cplx> out;
    out.reserve(v.size());
    for (const Rat& q : v) out.emplace_back(to_double(q));
    return out;
}

} // namespace

TEST_CASE("elementary modifications shift one exponent against its trace") {
    std::vector<cplx> lam{0.3, 0.0, 0.0};
    std::vector<long> mu{0, 0, 0};

    auto dm = elm_bookkeeping<cplx>(TransformKind::ElmMinus(0), lam, mu, 0);
    CHECK(std::abs(dm.lambda[0] - cplx(0.7)) < 1e-15);
    CHECK(dm.lambda[1] == cplx(0.0));
    CHECK(dm.mu == std::vector<long>{1, 0, 0});
    CHECK(dm.deg_line == -1);

    auto dp = elm_bookkeeping<cplx>(TransformKind::ElmPlus(0), lam, mu, 0);
    CHECK(std::abs(dp.lambda[0] - cplx(-0.3)) < 1e-15);
    CHECK(dp.mu == std::vector<long>{-1, 0, 0});
    CHECK(dp.deg_line == 1);

    // the two modifications are mutually inverse
    auto back = elm_bookkeeping<cplx>(TransformKind::ElmPlus(0), dm.lambda, dm.mu, dm.deg_line);
    CHECK(std::abs(back.lambda[0] - lam[0]) < 1e-15);
    CHECK(back.mu == mu);
    CHECK(back.deg_line == 0);

    CHECK_THROWS_AS(elm_bookkeeping<cplx>(TransformKind::ElmMinus(3), lam, mu, 0),
                    validation_error);
}

TEST_CASE("bookkeeping stays exact over rationals") {
    RatVec lam{rat(3, 10), rat(1, 5), rat(-1, 2)};
    std::vector<long> mu{0, 2, -2};

    auto d1 = elm_bookkeeping<Rat>(TransformKind::ElmMinus(0), lam, mu, 0);
    CHECK(d1.lambda[0] == rat(7, 10));
    CHECK(d1.mu == std::vector<long>{1, 2, -2});
    CHECK(d1.deg_line == -1);

    auto d2 = elm_bookkeeping<Rat>(TransformKind::ElmPlus(0), d1.lambda, d1.mu, d1.deg_line);
    CHECK(d2.lambda == lam);
    CHECK(d2.mu == mu);
    CHECK(d2.deg_line == 0);

    auto dt = elm_bookkeeping<Rat>(TransformKind::Tensor({rat(1, 2), rat(-1), rat(3, 2)}, 2),
                                   lam, mu, 0);
    CHECK(dt.lambda == RatVec{rat(4, 5), rat(-4, 5), rat(1)});
    CHECK(dt.mu == std::vector<long>{1, 0, 1});
    CHECK(dt.deg_line == 4);

    auto ds = elm_bookkeeping<Rat>(TransformKind::Swap(0), lam, mu, 0);
    CHECK(ds.lambda == RatVec{rat(-3, 10), rat(1, 5), rat(-1, 2)});
    CHECK(ds.mu == mu);
    CHECK(ds.deg_line == 0);

    CHECK_THROWS_AS(elm_bookkeeping<Rat>(TransformKind::Tensor({rat(1, 3), rat(0), rat(0)}, 0),
                                         lam, mu, 0),
                    validation_error);
}

TEST_CASE("local trace coordinates survive elementary modifications") {
    Rng rng(404);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<cplx> lam;
        std::vector<long> mu;
        for (int k = 0; k < 4; ++k) {
            lam.push_back(rng.box(-2.0, 2.0, -0.4, 0.4));
            mu.push_back(static_cast<long>(rng.bits() % 13) - 6);
        }
        const int idx = static_cast<int>(rng.bits() % 4);
        for (const auto& kind : {TransformKind::ElmMinus(idx), TransformKind::ElmPlus(idx),
                                 TransformKind::Swap(idx)}) {
            auto d = elm_bookkeeping<cplx>(kind, lam, mu, 0);
            auto before = mu_map(lam);
            auto after = mu_map(d.lambda);
            for (int k = 0; k < 4; ++k)
                CHECK(std::abs(after[k] - before[k]) <= 1e-9 * (1.0 + std::abs(before[k])));
        }
    }
}

TEST_CASE("an eigenvalue swap moves the marking to the complementary line") {
    FuchsianSystem sys;
    sys.poles = {SpherePoint::finite(0.0), SpherePoint::finite(1.0)};
    sys.residues = {Mat2{0.3, 1.0, 0.0, -0.3}, Mat2{-0.3, -1.0, 0.0, 0.3}};
    auto c = make_connection(sys, {0.3, 0.3}, {0, 0}, 0);

    auto s = swap_parabolic(c, 0);
    CHECK(std::abs(s.lambda[0] - cplx(-0.3)) < 1e-14);
    CHECK(lines_equal(s.lines[0], eigenline(sys.residues[0], cplx(-0.3)), 1e-12));
    CHECK(s.lambda[1] == c.lambda[1]);
    CHECK(s.mu == c.mu);
    REQUIRE(s.alt[0].has_value());

    // a second swap restores the original bits from the cache
    auto s2 = swap_parabolic(s, 0);
    CHECK(s2.lambda[0] == c.lambda[0]);
    CHECK(s2.lines[0].u == c.lines[0].u);
    CHECK(s2.lines[0].v == c.lines[0].v);

    auto s3 = swap_parabolic(s2, 0);
    CHECK(s3.lambda[0] == s.lambda[0]);
    CHECK(s3.lines[0].u == s.lines[0].u);
    CHECK(s3.lines[0].v == s.lines[0].v);
}

TEST_CASE("a swap at a resonant pole is the identity") {
    FuchsianSystem sys;
    sys.poles = {SpherePoint::finite(0.0), SpherePoint::finite(1.0)};
    sys.residues = {Mat2{0.5, 1.0, 0.0, 0.5}, Mat2{-0.5, -1.0, 0.0, -0.5}};
    auto c = make_connection(sys, {0.5, -0.5}, {1, -1}, 0);
    auto s = swap_parabolic(c, 0);
    CHECK(s.lambda[0] == c.lambda[0]);
    CHECK(s.lines[0].u == c.lines[0].u);
    CHECK_FALSE(s.alt[0].has_value());
}

TEST_CASE("a swap on a numerically scalar residue is refused") {
    ParabolicConnection c;
    c.sys.poles = {SpherePoint::finite(0.0), SpherePoint::finite(1.0)};
    c.sys.residues = {Mat2{0.5, 0.0, 0.0, 0.5}, Mat2{-0.5, 0.0, 0.0, -0.5}};
    c.lambda = {cplx(0.5 + 2e-9), cplx(-0.5)};
    c.mu = {1, -1};
    c.deg_line = 0;
    c.lines = {Line{1.0, 0.0}, Line{1.0, 0.0}};
    c.alt.assign(2, std::nullopt);
    CHECK_THROWS_AS(swap_parabolic(c, 0), undetermined_error);
    CHECK_THROWS_AS(swap_parabolic(c, 7), validation_error);
}

TEST_CASE("coordinate reflections flip single exponents") {
    std::vector<cplx> lam{0.3, 0.1, 0.2, 0.4};
    auto out = weyl_apply({1}, lam);
    CHECK(out[0] == cplx(-0.3));
    CHECK(out[1] == cplx(0.1));
    CHECK(out[2] == cplx(0.2));
    CHECK(out[3] == cplx(0.4));
}

TEST_CASE("the affine reflection recenters around the sum-one hyperplane") {
    RatVec lam{rat(1, 2), rat(0), rat(0), rat(0)};
    CHECK(weyl_apply({0}, lam) == RatVec{rat(3, 4), rat(1, 4), rat(1, 4), rat(1, 4)});

    // points with exponent sum one are fixed pointwise
    RatVec quarter{rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)};
    CHECK(weyl_apply({0}, quarter) == quarter);
    RatVec corner{rat(1), rat(0), rat(0), rat(0)};
    CHECK(weyl_apply({0}, corner) == corner);
}

TEST_CASE("reflection relations hold as exact affine-map identities") {
    const auto id = AffineMapOnLambda::identity(4);
    for (int k = 0; k <= 4; ++k) {
        auto s = weyl_generator(k);
        CHECK(s.after(s) == id);
    }
    for (int k = 1; k <= 4; ++k) {
        auto p = weyl_generator(0).after(weyl_generator(k));
        CHECK(p.after(p).after(p) == id);
    }
    for (int j = 1; j <= 4; ++j)
        for (int k = j + 1; k <= 4; ++k) {
            auto p = weyl_generator(j).after(weyl_generator(k));
            CHECK(p.after(p) == id);
        }
    CHECK_THROWS_AS(weyl_generator(5), validation_error);
}

TEST_CASE("rational and floating reflection words agree") {
    Rng rng(11);
    for (int t = 0; t < 20; ++t) {
        RatVec lam = rand_rat_vec(rng, 4);
        std::vector<int> word{static_cast<int>(rng.bits() % 5), static_cast<int>(rng.bits() % 5),
                              static_cast<int>(rng.bits() % 5)};
        RatVec exact = weyl_apply(word, lam);
        std::vector<cplx> approx = weyl_apply(word, to_doubles(lam));
        for (int k = 0; k < 4; ++k)
            CHECK(std::abs(approx[k] - to_double(exact[k])) < 1e-12);
    }
}

TEST_CASE("lattice translations and flips act as tabulated") {
    RatVec lam{rat(1, 10), rat(1, 5), rat(3, 10), rat(2, 5)};

    CHECK(bl_apply({BlGenerator::add_one, 0, 0}, lam) ==
          RatVec{rat(11, 10), rat(1, 5), rat(3, 10), rat(2, 5)});
    CHECK(bl_apply({BlGenerator::flip_pair, 0, 1}, lam) ==
          RatVec{rat(2, 5), rat(3, 10), rat(3, 10), rat(2, 5)});
    // the last pole carries the shifted flip
    CHECK(bl_apply({BlGenerator::flip_pair, 0, 3}, lam) ==
          RatVec{rat(2, 5), rat(1, 5), rat(3, 10), rat(11, 10)});
    CHECK(bl_apply({BlGenerator::add_half_pair, 1, 2}, lam) ==
          RatVec{rat(1, 10), rat(7, 10), rat(4, 5), rat(2, 5)});
    CHECK(bl_apply({BlGenerator::flip_one, 1, 0}, lam) ==
          RatVec{rat(1, 10), rat(-1, 5), rat(3, 10), rat(2, 5)});
    CHECK(bl_apply({BlGenerator::flip_one, 3, 0}, lam) ==
          RatVec{rat(1, 10), rat(1, 5), rat(3, 10), rat(3, 5)});

    CHECK_THROWS_AS(bl_generator({BlGenerator::flip_pair, 2, 2}, 4), validation_error);
    CHECK_THROWS_AS(bl_generator({BlGenerator::add_one, 9, 0}, 4), validation_error);
}

TEST_CASE("translation relations in the exponent lattice are exact") {
    for (int n : {4, 5}) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                auto tm = bl_generator({BlGenerator::flip_pair, i, j}, n);
                auto ri = bl_generator({BlGenerator::flip_one, i, 0}, n);
                auto rj = bl_generator({BlGenerator::flip_one, j, 0}, n);
                auto once = tm.after(ri);
                CHECK(once.after(once) == bl_generator({BlGenerator::add_one, i, 0}, n));
                CHECK(tm.after(ri).after(rj) ==
                      bl_generator({BlGenerator::add_half_pair, i, j}, n));
            }
    }
}

TEST_CASE("special exponent walls are permuted by the symmetry generators") {
    std::vector<AffineMapOnLambda> gens;
    for (int k = 0; k <= 4; ++k) gens.push_back(weyl_generator(k));
    gens.push_back(bl_generator({BlGenerator::add_one, 1, 0}, 4));
    gens.push_back(bl_generator({BlGenerator::add_half_pair, 0, 2}, 4));
    gens.push_back(bl_generator({BlGenerator::flip_pair, 1, 3}, 4));
    gens.push_back(bl_generator({BlGenerator::flip_one, 3, 0}, 4));

    Rng rng(7);
    int special_seen = 0;
    for (int t = 0; t < 60; ++t) {
        RatVec lam = rand_rat_vec(rng, 4);
        const bool special = classify_lambda(to_doubles(lam), 1e-9).special;
        for (const auto& g : gens)
            CHECK(classify_lambda(to_doubles(g(lam)), 1e-9).special == special);
        special_seen += special ? 1 : 0;
    }
    CHECK(special_seen > 0);
    CHECK(special_seen < 60);
}

TEST_CASE("the rank-one gauge on a diagonal system matches the closed form") {
    auto c = make_connection(diag_three_pole(), {0.3, -0.2, -0.5}, {0, 0, 0}, 0);
    REQUIRE(lines_equal(c.lines[0], Line{1.0, 0.0}, 1e-12));
    REQUIRE(lines_equal(c.lines[1], Line{0.0, 1.0}, 1e-12));

    auto r = schlesinger_transform(c, 0, 1);
    const Mat2& a0 = r.conn.sys.residues[0];
    const Mat2& a1 = r.conn.sys.residues[1];
    const Mat2& a2 = r.conn.sys.residues[2];
    CHECK(std::abs(a0.a - cplx(0.3)) < 1e-12);
    CHECK(std::abs(a0.d - cplx(0.7)) < 1e-12);
    CHECK(std::abs(a0.b) + std::abs(a0.c) < 1e-12);
    CHECK(std::abs(a1.a - cplx(0.2)) < 1e-12);
    CHECK(std::abs(a1.d - cplx(-1.2)) < 1e-12);
    CHECK(std::abs(a1.b) + std::abs(a1.c) < 1e-12);
    CHECK(std::abs(a2.a - cplx(-0.5)) < 1e-12);
    CHECK(std::abs(a2.d - cplx(0.5)) < 1e-12);

    CHECK(std::abs(r.conn.lambda[0] - cplx(0.7)) < 1e-12);
    CHECK(std::abs(r.conn.lambda[1] - cplx(0.2)) < 1e-12);
    CHECK(std::abs(r.conn.lambda[2] - cplx(-0.5)) < 1e-12);
    CHECK(r.conn.mu == std::vector<long>{1, -1, 0});
    CHECK(r.conn.deg_line == 0);
    CHECK(lines_equal(r.conn.lines[0], Line{0.0, 1.0}, 1e-12));
    CHECK(lines_equal(r.conn.lines[1], Line{1.0, 0.0}, 1e-12));

    // the gauge is diag(1, (z - t_i)/(z - t_j))
    for (cplx z : {cplx(3.0, 0.0), cplx(-1.0, 2.0)}) {
        Mat2 g = r.gauge.at(z);
        const cplx expect = z / (z - cplx(1.0));
        CHECK(std::abs(g.a - 1.0) < 1e-12);
        CHECK(std::abs(g.d - expect) < 1e-12);
        CHECK(std::abs(g.b) + std::abs(g.c) < 1e-12);
        CHECK(std::abs(det(g) - expect) < 1e-12);
    }
}

TEST_CASE("the rank-one gauge preserves the monodromy fingerprint") {
    auto c = tame_four_pole(5);
    auto r = schlesinger_transform(c, 0, 2);

    Mat2 total = Mat2::zero();
    for (const Mat2& a : r.conn.sys.residues) total += a;
    CHECK(fnorm(total) < 1e-12);

    auto before = riemann_hilbert(c).flat();
    auto after = riemann_hilbert(r.conn).flat();
    REQUIRE(before.size() == after.size());
    for (size_t k = 0; k < before.size(); ++k)
        CHECK(std::abs(after[k] - before[k]) <= 1e-6 * (1.0 + std::abs(before[k])));
}

TEST_CASE("the inverse gauge restores the connection up to a constant frame") {
    auto c = tame_four_pole(9);
    auto r1 = schlesinger_transform(c, 1, 3);
    auto r2 = schlesinger_transform(r1.conn, 3, 1);

    for (int k = 0; k < 4; ++k) {
        CHECK(std::abs(r2.conn.lambda[k] - c.lambda[k]) < 1e-12);
        CHECK(r2.conn.mu[k] == c.mu[k]);
    }
    CHECK(r2.conn.deg_line == c.deg_line);

    const cplx z1{-1.3, 0.7}, z2{4.2, 0.2};
    const Mat2 c1 = r2.gauge.at(z1) * r1.gauge.at(z1);
    const Mat2 c2 = r2.gauge.at(z2) * r1.gauge.at(z2);
    CHECK(fnorm(c1 - c2) <= 1e-9 * (1.0 + fnorm(c1)));

    const Mat2 cinv = inverse(c1);
    for (int k = 0; k < 4; ++k) {
        const Mat2 expect = c1 * c.sys.residues[k] * cinv;
        CHECK(fnorm(r2.conn.sys.residues[k] - expect) <= 1e-8 * (1.0 + fnorm(expect)));
        CHECK(lines_equal(r2.conn.lines[k], apply(c1, c.lines[k]), 1e-7));
    }
}

TEST_CASE("coincident complementary eigenlines leave no valid gauge") {
    auto c = make_connection(diag_three_pole(), {0.3, 0.2, -0.5}, {0, 0, 0}, 0);
    CHECK_THROWS_AS(schlesinger_transform(c, 0, 1), numerical_error);
}

TEST_CASE("a finite-pole gauge never touches the residue at infinity") {
    FuchsianSystem sys;
    sys.poles = {SpherePoint::finite(0.0), SpherePoint::finite(1.0), SpherePoint::infinity()};
    const Mat2 a0{0.3, 0.4, 0.1, -0.3}, a1{0.1, -0.2, 0.3, -0.1};
    sys.residues = {a0, a1, -(a0 + a1)};
    std::vector<cplx> lam{eigenvalues(a0)[0], eigenvalues(a1)[0], eigenvalues(-(a0 + a1))[0]};
    auto c = make_connection(sys, lam, {0, 0, 0}, 0);

    auto r = schlesinger_transform(c, 0, 1);
    CHECK(r.conn.sys.residues[2].a == c.sys.residues[2].a);
    CHECK(r.conn.sys.residues[2].b == c.sys.residues[2].b);
    CHECK(r.conn.sys.residues[2].c == c.sys.residues[2].c);
    CHECK(r.conn.sys.residues[2].d == c.sys.residues[2].d);
    CHECK(r.conn.lambda[2] == c.lambda[2]);
    CHECK(r.conn.lines[2].u == c.lines[2].u);
    CHECK(r.conn.lines[2].v == c.lines[2].v);

    CHECK_THROWS_AS(schlesinger_transform(c, 0, 2), validation_error);
    CHECK_THROWS_AS(schlesinger_transform(c, 1, 1), validation_error);
}
