#pragma once
#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "isomon/mat2.hpp"
#include "isomon/poly.hpp"
#include "isomon/rational.hpp"

namespace isomon {

struct SpherePoint {
    cplx z{0.0};
    bool at_infinity = false;

    static SpherePoint infinity() { return SpherePoint{0.0, true}; }
    static SpherePoint finite(cplx w) { return SpherePoint{w, false}; }
};

bool same_point(const SpherePoint& a, const SpherePoint& b, double tol);

// Logarithmic connection nabla = d - (sum_i A_i/(z - t_i)) dz on the trivial
// rank-2 bundle over P^1; flat sections solve Y' = B(z)Y.  At most one marked
// point sits at infinity and the residues of all marked points sum to zero,
// so the residue at infinity, when marked, equals minus the sum of the
// finite ones.
struct FuchsianSystem {
    std::vector<SpherePoint> poles;
    std::vector<Mat2> residues;

    int n() const { return static_cast<int>(poles.size()); }
    std::optional<int> infinity_index() const;
    std::vector<int> finite_indices() const;
    double scale() const;    // max(1, |t_i|, residue entries)
    Mat2 rhs(cplx z) const;  // B(z) = sum over finite poles of A_i/(z - t_i)
};

// Parabolic structure on top of the system: at each pole a marked residue
// eigenvalue lambda_i with its eigenline, the integer trace mu_i, and the
// degree of the determinant line twist.
struct ParabolicConnection {
    FuchsianSystem sys;
    std::vector<cplx> lambda;
    std::vector<long> mu;
    long deg_line = 0;
    std::vector<Line> lines;
    // datum displaced by the last eigenvalue swap at each pole; a second
    // swap restores the original bits instead of recomputing an eigenline
    std::vector<std::optional<std::pair<cplx, Line>>> alt;

    int n() const { return sys.n(); }
};

// Derives the marked eigenlines from (residues, lambda).
ParabolicConnection make_connection(FuchsianSystem sys, std::vector<cplx> lambda,
                                    std::vector<long> mu, long deg_line);

// 2n parabolic weights (alpha_1,...,alpha_{2n}) in [0,1]; the pair
// (alpha_{2i-1}, alpha_{2i}) belongs to pole i and alpha_{2i} is the one
// carried by the marked line.
struct Weight {
    RatVec alpha;
    int n() const { return static_cast<int>(alpha.size()) / 2; }
};

struct Diagnostics {
    bool ok = true;
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    double scale = 1.0;
};

Diagnostics diagnose(const ParabolicConnection& c, double tol,
                     const Weight* weight = nullptr);
// Throws validation_error listing every failed check.
void validate_system(const ParabolicConnection& c, double tol,
                     const Weight* weight = nullptr);

struct ExponentRow {
    cplx lambda;                   // marked exponent
    cplx other;                    // mu - lambda
    std::array<cplx, 2> realized;  // eigenvalues of the residue matrix
    double mismatch;               // multiset distance between the two pairs
};

struct ExponentData {
    std::vector<ExponentRow> rows;
    long sum_mu = 0;
    long deg_line = 0;
    bool fuchs_ok = false;  // sum_mu + deg_line == 0
};

ExponentData local_exponents(const ParabolicConnection& c);

struct ReducibleWitness {
    std::vector<int> signs;  // +1/-1 per pole, first entry +1
    long level;              // nearest integer to sum(signs . lambda)
};

struct LambdaClassification {
    bool resonant = false;
    std::vector<int> resonant_indices;  // 2*lambda_i within tol of an integer
    bool reducible = false;
    std::vector<ReducibleWitness> witnesses;
    bool special = false;  // resonant or reducible
    std::vector<std::string> wall_labels;
};

LambdaClassification classify_lambda(const std::vector<cplx>& lambda, double tol);

Rat parabolic_degree(long deg_line, const Weight& w);
// deg_f plus, per pole, the marked weight when the subbundle fiber lies on
// the marked line and the other weight of the pair otherwise.
Rat sub_parabolic_degree(long deg_f, const std::vector<bool>& aligned, const Weight& w);

// Line subbundle O(-d) -> O + O invariant under the connection, spanned by
// the section (u(z), v(z)) with gcd(u,v) = 1 and max(deg u, deg v) = d.
// chi[i] is the residue eigenvalue by which A_i acts on the fiber at pole i;
// the chi sum over all marked poles equals the subbundle degree -d.
struct InvariantSubbundle {
    long deg = 0;
    Poly u, v;
    std::vector<cplx> chi;
    int family_dim = 1;  // >1: member of a positive-dimensional family
};

std::vector<InvariantSubbundle> find_invariant_subbundles(const ParabolicConnection& c,
                                                          int d, double tol);

// Subbundle fiber direction at a marked point (leading coefficients at infinity).
Line fiber_at(const InvariantSubbundle& f, const SpherePoint& p);

struct StabilityWitness {
    InvariantSubbundle sub;
    std::vector<bool> aligned;
    Rat par_deg;
};

struct StabilityResult {
    bool stable = false;
    bool strictly_semistable = false;  // sharpest witness sits exactly at the threshold
    Rat par_deg;
    Rat threshold;  // par_deg / 2
    std::vector<StabilityWitness> witnesses;  // sorted, largest par_deg first
    int degree_bound = 0;  // subbundle degrees 0..-degree_bound were searched
};

// Stable iff every invariant line subbundle has parabolic degree strictly
// below par_deg/2.  Degrees beyond max(min_degree_bound, smallest d with
// -d + sum(larger weight per pole) < par_deg/2) cannot produce a witness
// and are not searched.
StabilityResult check_stability(const ParabolicConnection& c, const Weight& w,
                                double tol, int min_degree_bound = 1);

} // namespace isomon
