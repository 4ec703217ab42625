#include "isomon/fuchsian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "isomon/errors.hpp"

namespace isomon {

namespace {

bool near_integer(cplx x, double tol, long* k = nullptr) {
    long r = std::llround(x.real());
    if (k) *k = r;
    return std::abs(x - cplx(static_cast<double>(r), 0.0)) <= tol;
}

Poly shifted(const Poly& p, int k) {
    Poly r(p.size() + k, 0.0);
    for (size_t j = 0; j < p.size(); ++j) r[j + k] = p[j];
    return r;
}

double vec_norm(const Line& l) { return std::sqrt(std::norm(l.u) + std::norm(l.v)); }

} // namespace

std::vector<cplx> poly_roots(const Poly& p, double tol) {
    double mx = 0.0;
    for (cplx c : p) mx = std::max(mx, std::abs(c));
    Poly q = trimmed(p, tol * mx);
    if (q.size() <= 1) return {};
    int m = static_cast<int>(q.size()) - 1;
    if (m == 1) return {-q[0] / q[1]};
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(m, m);
    for (int i = 1; i < m; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < m; ++i) C(i, m - 1) = -q[i] / q[m];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    std::vector<cplx> roots(m);
    for (int i = 0; i < m; ++i) roots[i] = es.eigenvalues()(i);
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return roots;
}

bool same_point(const SpherePoint& a, const SpherePoint& b, double tol) {
    if (a.at_infinity || b.at_infinity) return a.at_infinity && b.at_infinity;
    return std::abs(a.z - b.z) <= tol;
}

std::optional<int> FuchsianSystem::infinity_index() const {
    for (int i = 0; i < n(); ++i)
        if (poles[i].at_infinity) return i;
    return std::nullopt;
}

std::vector<int> FuchsianSystem::finite_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < n(); ++i)
        if (!poles[i].at_infinity) idx.push_back(i);
    return idx;
}

double FuchsianSystem::scale() const {
    double s = 1.0;
    for (const auto& p : poles)
        if (!p.at_infinity) s = std::max(s, std::abs(p.z));
    for (const auto& m : residues) s = std::max(s, max_abs_entry(m));
    return s;
}

Mat2 FuchsianSystem::rhs(cplx z) const {
    Mat2 b = Mat2::zero();
    for (int i = 0; i < n(); ++i)
        if (!poles[i].at_infinity) b += (1.0 / (z - poles[i].z)) * residues[i];
    return b;
}

ParabolicConnection make_connection(FuchsianSystem sys, std::vector<cplx> lambda,
                                    std::vector<long> mu, long deg_line) {
    size_t n = sys.poles.size();
    if (sys.residues.size() != n || lambda.size() != n || mu.size() != n)
        throw validation_error("pole, residue, lambda and mu lists must have equal length");
    ParabolicConnection c;
    c.sys = std::move(sys);
    c.lambda = std::move(lambda);
    c.mu = std::move(mu);
    c.deg_line = deg_line;
    c.lines.reserve(n);
    for (size_t i = 0; i < n; ++i)
        c.lines.push_back(eigenline(c.sys.residues[i], c.lambda[i]));
    c.alt.assign(n, std::nullopt);
    return c;
}

Diagnostics diagnose(const ParabolicConnection& c, double tol, const Weight* weight) {
    Diagnostics d;
    d.scale = c.sys.scale();
    auto fail = [&](std::string m) {
        d.ok = false;
        d.errors.push_back(std::move(m));
    };

    int n = c.n();
    if (n < 3) fail("need at least 3 marked points, got " + std::to_string(n));
    if (c.sys.residues.size() != static_cast<size_t>(n) ||
        c.lambda.size() != static_cast<size_t>(n) || c.mu.size() != static_cast<size_t>(n) ||
        c.lines.size() != static_cast<size_t>(n)) {
        fail("pole, residue, lambda, mu and line lists must have equal length");
        return d;
    }

    int n_inf = 0;
    for (const auto& p : c.sys.poles) n_inf += p.at_infinity ? 1 : 0;
    if (n_inf > 1) fail("more than one marked point at infinity");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (!c.sys.poles[i].at_infinity && !c.sys.poles[j].at_infinity &&
                std::abs(c.sys.poles[i].z - c.sys.poles[j].z) <= tol * d.scale) {
                std::ostringstream os;
                os << "marked points " << i + 1 << " and " << j + 1 << " collide";
                fail(os.str());
            }

    Mat2 sum = Mat2::zero();
    for (const auto& a : c.sys.residues) sum += a;
    if (fnorm(sum) > tol * d.scale * n) {
        std::ostringstream os;
        os << "residues do not sum to zero (|sum| = " << fnorm(sum) << ")";
        fail(os.str());
    }

    long sum_mu = 0;
    for (int i = 0; i < n; ++i) {
        const Mat2& a = c.sys.residues[i];
        double asc = 1.0 + fnorm(a);
        auto e = eigenvalues(a);
        double md = std::min(std::abs(c.lambda[i] - e[0]), std::abs(c.lambda[i] - e[1]));
        if (md > tol * asc) {
            std::ostringstream os;
            os << "exponent lambda[" << i + 1 << "] not in spectrum of residue " << i + 1
               << " (distance " << md << ")";
            fail(os.str());
        }
        if (std::abs(tr(a) - cplx(static_cast<double>(c.mu[i]), 0.0)) > tol * asc) {
            std::ostringstream os;
            os << "mu[" << i + 1 << "] does not match the trace of residue " << i + 1;
            fail(os.str());
        }
        double ln = vec_norm(c.lines[i]);
        if (ln == 0.0) {
            fail("marked line " + std::to_string(i + 1) + " is the zero vector");
        } else {
            Line al = apply(a, c.lines[i]);
            double rn = std::sqrt(std::norm(al.u - c.lambda[i] * c.lines[i].u) +
                                  std::norm(al.v - c.lambda[i] * c.lines[i].v));
            if (rn > tol * asc * ln)
                fail("marked line " + std::to_string(i + 1) +
                     " is not an eigenline for lambda[" + std::to_string(i + 1) + "]");
        }
        sum_mu += c.mu[i];
    }

    if (sum_mu + c.deg_line != 0) {
        std::ostringstream os;
        os << "deg_line must equal -(sum of mu): " << c.deg_line << " vs " << -sum_mu;
        fail(os.str());
    }

    if (weight) {
        if (weight->alpha.size() != static_cast<size_t>(2 * n))
            fail("expected " + std::to_string(2 * n) + " weights, got " +
                 std::to_string(weight->alpha.size()));
        for (size_t i = 0; i < weight->alpha.size(); ++i)
            if (weight->alpha[i] < 0 || weight->alpha[i] > 1)
                fail("weight " + std::to_string(i + 1) + " outside [0,1]");
    }

    auto cls = classify_lambda(c.lambda, std::max(tol, 1e-9));
    for (const auto& l : cls.wall_labels) d.warnings.push_back(l);
    return d;
}

void validate_system(const ParabolicConnection& c, double tol, const Weight* weight) {
    Diagnostics d = diagnose(c, tol, weight);
    if (d.ok) return;
    std::string msg;
    for (size_t i = 0; i < d.errors.size(); ++i) {
        if (i) msg += "; ";
        msg += d.errors[i];
    }
    throw validation_error(msg);
}

ExponentData local_exponents(const ParabolicConnection& c) {
    ExponentData e;
    e.deg_line = c.deg_line;
    for (int i = 0; i < c.n(); ++i) {
        ExponentRow r;
        r.lambda = c.lambda[i];
        r.other = cplx(static_cast<double>(c.mu[i]), 0.0) - c.lambda[i];
        r.realized = eigenvalues(c.sys.residues[i]);
        double d1 = std::max(std::abs(r.lambda - r.realized[0]),
                             std::abs(r.other - r.realized[1]));
        double d2 = std::max(std::abs(r.lambda - r.realized[1]),
                             std::abs(r.other - r.realized[0]));
        r.mismatch = std::min(d1, d2);
        e.rows.push_back(r);
        e.sum_mu += c.mu[i];
    }
    e.fuchs_ok = (e.sum_mu + e.deg_line == 0);
    return e;
}

LambdaClassification classify_lambda(const std::vector<cplx>& lambda, double tol) {
    LambdaClassification r;
    int n = static_cast<int>(lambda.size());
    for (int i = 0; i < n; ++i) {
        long k;
        if (near_integer(2.0 * lambda[i], tol, &k)) {
            r.resonant = true;
            r.resonant_indices.push_back(i);
            r.wall_labels.push_back("2*lambda_" + std::to_string(i + 1) + " = " +
                                    std::to_string(k));
        }
    }
    // signed sums; each witness pair {eps, -eps} is reported once, with a
    // leading + sign
    if (n >= 1 && n <= 24) {
        for (unsigned long m = 0; m < (1ul << (n - 1)); ++m) {
            std::vector<int> signs(n, 1);
            cplx s = lambda[0];
            for (int i = 1; i < n; ++i) {
                if ((m >> (i - 1)) & 1) signs[i] = -1;
                s += static_cast<double>(signs[i]) * lambda[i];
            }
            long k;
            if (near_integer(s, tol * n, &k)) {
                r.reducible = true;
                r.witnesses.push_back({signs, k});
                std::string eps;
                for (int si : signs) eps += (si > 0 ? '+' : '-');
                r.wall_labels.push_back("sum " + eps + " . lambda = " + std::to_string(k));
            }
        }
    }
    r.special = r.resonant || r.reducible;
    return r;
}

Rat parabolic_degree(long deg_line, const Weight& w) {
    Rat s(static_cast<long int>(deg_line));
    for (const Rat& a : w.alpha) s += a;
    return s;
}

Rat sub_parabolic_degree(long deg_f, const std::vector<bool>& aligned, const Weight& w) {
    if (aligned.size() * 2 != w.alpha.size())
        throw validation_error("alignment vector and weight list have mismatched lengths");
    Rat s(static_cast<long int>(deg_f));
    for (size_t i = 0; i < aligned.size(); ++i)
        s += aligned[i] ? w.alpha[2 * i + 1] : w.alpha[2 * i];
    return s;
}

Line fiber_at(const InvariantSubbundle& f, const SpherePoint& p) {
    size_t d = static_cast<size_t>(-f.deg);
    if (p.at_infinity)
        return {d < f.u.size() ? f.u[d] : cplx(0.0), d < f.v.size() ? f.v[d] : cplx(0.0)};
    return {eval(f.u, p.z), eval(f.v, p.z)};
}

namespace {

// projective comparison of the stacked coefficient vectors
bool same_section(const InvariantSubbundle& x, const InvariantSubbundle& y) {
    if (x.deg != y.deg) return false;
    size_t len = std::max(std::max(x.u.size(), x.v.size()),
                          std::max(y.u.size(), y.v.size()));
    cplx dot = 0.0;
    double nx = 0.0, ny = 0.0;
    for (size_t k = 0; k < 2 * len; ++k) {
        const Poly& px = k < len ? x.u : x.v;
        const Poly& py = k < len ? y.u : y.v;
        size_t j = k < len ? k : k - len;
        cplx a = j < px.size() ? px[j] : cplx(0.0);
        cplx b = j < py.size() ? py[j] : cplx(0.0);
        dot += std::conj(a) * b;
        nx += std::norm(a);
        ny += std::norm(b);
    }
    if (nx == 0.0 || ny == 0.0) return false;
    return std::abs(dot) >= (1.0 - 1e-8) * std::sqrt(nx * ny);
}

bool coprime_sections(const Poly& u, const Poly& v, double tol) {
    Poly pu = trimmed(u, tol), pv = trimmed(v, tol);
    if (pu.empty() || pv.empty()) return false;  // zero against nonconstant
    if (pu.size() == 1 || pv.size() == 1) return true;
    const Poly& lo = pu.size() <= pv.size() ? pu : pv;
    const Poly& hi = pu.size() <= pv.size() ? pv : pu;
    double hmax = 0.0;
    for (cplx c : hi) hmax = std::max(hmax, std::abs(c));
    for (cplx r : poly_roots(lo, 1e-12)) {
        double esc = hmax * std::pow(std::max(1.0, std::abs(r)),
                                     static_cast<double>(hi.size() - 1));
        if (std::abs(eval(hi, r)) <= 1e-8 * esc) return false;
    }
    return true;
}

} // namespace

std::vector<InvariantSubbundle> find_invariant_subbundles(const ParabolicConnection& c,
                                                          int d, double tol) {
    if (d < 0) throw validation_error("subbundle search degree must be >= 0");
    int n = c.n();
    if (n > 16) throw validation_error("eigenvalue pattern scan is limited to 16 poles");
    double sc = c.sys.scale();
    double eig_tol = std::max(tol, 1e-12) * (1.0 + sc);
    double line_tol = std::max(100.0 * tol, 1e-8);

    // residue eigenvalues matched against the bookkeeping pair at each pole
    std::vector<std::array<cplx, 2>> ev(n);
    std::vector<int> two_sided;
    for (int i = 0; i < n; ++i) {
        auto e = eigenvalues(c.sys.residues[i]);
        if (std::abs(e[0] - c.lambda[i]) <= std::abs(e[1] - c.lambda[i]))
            ev[i] = {e[0], e[1]};
        else
            ev[i] = {e[1], e[0]};
        if (std::abs(ev[i][0] - ev[i][1]) > eig_tol) two_sided.push_back(i);
    }
    double sum_tol = std::max(tol, 1e-12) * (1.0 + sc) * n;

    auto fin = c.sys.finite_indices();
    int m = static_cast<int>(fin.size());
    std::vector<cplx> ts;
    for (int i : fin) ts.push_back(c.sys.poles[i].z);

    // chi-independent polynomial data for the linear identity
    Poly T = from_roots(ts);
    std::vector<Poly> P(m);
    for (int k = 0; k < m; ++k) {
        std::vector<cplx> others = ts;
        others.erase(others.begin() + k);
        P[k] = from_roots(others);
    }
    Poly B11, B12, B21, B22;
    for (int k = 0; k < m; ++k) {
        const Mat2& a = c.sys.residues[fin[k]];
        B11 = add(B11, scale(a.a, P[k]));
        B12 = add(B12, scale(a.b, P[k]));
        B21 = add(B21, scale(a.c, P[k]));
        B22 = add(B22, scale(a.d, P[k]));
    }

    std::vector<InvariantSubbundle> found;
    auto push_unique = [&](InvariantSubbundle s) {
        for (const auto& f : found)
            if (same_section(f, s)) return;
        found.push_back(std::move(s));
    };

    int nb = static_cast<int>(two_sided.size());
    for (unsigned long mask = 0; mask < (1ul << nb); ++mask) {
        std::vector<cplx> chi(n);
        std::vector<int> side(n, 0);
        for (int i = 0; i < n; ++i) chi[i] = ev[i][0];
        for (int b = 0; b < nb; ++b)
            if ((mask >> b) & 1) {
                side[two_sided[b]] = 1;
                chi[two_sided[b]] = ev[two_sided[b]][1];
            }
        cplx chi_sum = 0.0;
        for (int i = 0; i < n; ++i) chi_sum += chi[i];
        if (std::abs(chi_sum + static_cast<double>(d)) > sum_tol) continue;

        if (d == 0) {
            // constant sections: a common eigenline of every residue
            Line cand;
            bool have = false, ok = true;
            for (int i = 0; i < n && ok; ++i) {
                if (is_scalar(c.sys.residues[i], eig_tol)) continue;
                Line li = side[i] == 0 ? c.lines[i] : eigenline(c.sys.residues[i], ev[i][1]);
                if (!have) {
                    cand = li;
                    have = true;
                } else if (!lines_equal(cand, li, line_tol)) {
                    ok = false;
                }
            }
            if (!ok) continue;
            if (!have) {
                // every residue scalar: all constant lines are invariant
                push_unique({0, Poly{1.0}, Poly{0.0}, chi, 2});
                push_unique({0, Poly{0.0}, Poly{1.0}, chi, 2});
            } else {
                push_unique({0, Poly{cand.u}, Poly{cand.v}, chi, 1});
            }
            continue;
        }

        // polynomial identity T s' + (S I - Bt) s = 0 for s = (u, v) of
        // degree <= d, as a linear system on the stacked coefficients
        Poly S;
        for (int k = 0; k < m; ++k) S = add(S, scale(chi[fin[k]], P[k]));
        Poly M11 = add(S, scale(-1.0, B11));
        Poly M22 = add(S, scale(-1.0, B22));
        Poly M12 = scale(-1.0, B12);
        Poly M21 = scale(-1.0, B21);

        int rows = m + d, cols = 2 * (d + 1);
        Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * rows, cols);
        auto put = [&](int block, int col, const Poly& p) {
            for (size_t j = 0; j < p.size(); ++j) M(block * rows + static_cast<int>(j), col) += p[j];
        };
        for (int k = 0; k <= d; ++k) {
            Poly dterm = k > 0 ? shifted(scale(static_cast<double>(k), T), k - 1) : Poly{};
            put(0, k, add(dterm, shifted(M11, k)));
            put(1, k, shifted(M21, k));
            put(0, d + 1 + k, shifted(M12, k));
            put(1, d + 1 + k, add(dterm, shifted(M22, k)));
        }

        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        double smax = sv.size() ? sv(0) : 0.0;
        int nullity = 0;
        if (smax <= 0.0) {
            nullity = cols;
        } else {
            double thr = std::max(tol, 1e-12) * smax;
            bool gray = false;
            for (int i = 0; i < sv.size(); ++i) {
                if (sv(i) < thr)
                    ++nullity;
                else if (sv(i) < 50.0 * thr)
                    gray = true;
            }
            if (gray) {
                std::ostringstream os;
                os << "rank decision for an invariant-subbundle pattern at degree " << -d
                   << " falls in the ambiguity band; tighten the tolerance or perturb the input";
                throw undetermined_error(os.str());
            }
        }
        if (nullity == 0) continue;

        std::vector<Eigen::VectorXcd> cands;
        for (int i = 0; i < nullity; ++i) cands.push_back(svd.matrixV().col(cols - 1 - i));
        for (int i = 0; i < nullity; ++i)
            for (int j = i + 1; j < nullity; ++j) {
                cands.push_back((cands[i] + cands[j]).normalized());
                cands.push_back((cands[i] - cands[j]).normalized());
            }
        for (const auto& vec : cands) {
            if (std::max(std::abs(vec(d)), std::abs(vec(2 * d + 1))) <= 1e-8) continue;
            Poly u(d + 1), v(d + 1);
            for (int k = 0; k <= d; ++k) {
                u[k] = vec(k);
                v[k] = vec(d + 1 + k);
            }
            if (!coprime_sections(u, v, 1e-10)) continue;
            push_unique({-d, std::move(u), std::move(v), chi, nullity});
            break;
        }
    }
    return found;
}

StabilityResult check_stability(const ParabolicConnection& c, const Weight& w,
                                double tol, int min_degree_bound) {
    int n = c.n();
    if (w.alpha.size() != static_cast<size_t>(2 * n))
        throw validation_error("expected " + std::to_string(2 * n) + " weights, got " +
                               std::to_string(w.alpha.size()));
    for (const Rat& a : w.alpha)
        if (a < 0 || a > 1) throw validation_error("weights must lie in [0,1]");

    StabilityResult r;
    r.par_deg = parabolic_degree(c.deg_line, w);
    r.threshold = r.par_deg / 2;

    // degrees -d with -d + sum(max weight per pole) below the threshold
    // cannot destabilize
    Rat wmax(0);
    for (int i = 0; i < n; ++i) wmax += std::max(w.alpha[2 * i], w.alpha[2 * i + 1]);
    long d_th = 0;
    Rat diff = wmax - r.threshold;
    if (diff >= 0) {
        mpz_class q;
        mpz_fdiv_q(q.get_mpz_t(), diff.get_num_mpz_t(), diff.get_den_mpz_t());
        d_th = q.get_si() + 1;
    }
    r.degree_bound = static_cast<int>(std::max<long>(min_degree_bound, d_th));

    double line_tol = std::max(100.0 * tol, 1e-8);
    for (int d = 0; d <= r.degree_bound; ++d) {
        for (auto& sub : find_invariant_subbundles(c, d, tol)) {
            std::vector<bool> aligned(n);
            for (int i = 0; i < n; ++i)
                aligned[i] = lines_equal(fiber_at(sub, c.sys.poles[i]), c.lines[i], line_tol);
            Rat pd = sub_parabolic_degree(sub.deg, aligned, w);
            r.witnesses.push_back({std::move(sub), std::move(aligned), pd});
        }
    }
    std::sort(r.witnesses.begin(), r.witnesses.end(),
              [](const StabilityWitness& x, const StabilityWitness& y) {
                  if (x.par_deg != y.par_deg) return x.par_deg > y.par_deg;
                  return x.sub.deg > y.sub.deg;
              });
    if (r.witnesses.empty()) {
        r.stable = true;
    } else {
        const Rat& best = r.witnesses.front().par_deg;
        r.stable = best < r.threshold;
        r.strictly_semistable = (best == r.threshold);
    }
    return r;
}

} // namespace isomon
