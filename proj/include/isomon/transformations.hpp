#pragma once
#include <vector>

#include "isomon/fuchsian.hpp"
#include "isomon/mat2.hpp"
#include "isomon/poly.hpp"
#include "isomon/rational.hpp"

namespace isomon {

// Exponent-level transformation: raise/lower at one pole, twist by a line
// bundle, or switch to the other eigenvalue of the pair.
struct TransformKind {
    enum Tag { elm_plus, elm_minus, tensor, swap_line } tag = elm_plus;
    int index = -1;  // pole for elm_plus/elm_minus/swap_line
    RatVec nu;       // per-pole exponent shift for tensor
    long deg_l1 = 0; // degree of the twisting bundle

    static TransformKind ElmPlus(int i) { return {elm_plus, i, {}, 0}; }
    static TransformKind ElmMinus(int i) { return {elm_minus, i, {}, 0}; }
    static TransformKind Tensor(RatVec nu, long deg_l1) {
        return {tensor, -1, std::move(nu), deg_l1};
    }
    static TransformKind Swap(int i) { return {swap_line, i, {}, 0}; }
};

// Exponent bookkeeping after a transformation; per pole the marked exponent
// and its complement still sum to the determinant residue, and the mu sum
// still balances the twist degree.
template <class S>
struct BookkeepingDelta {
    TransformKind kind;
    std::vector<S> lambda;
    std::vector<long> mu;
    long deg_line = 0;
};

// Table action on the exponents: ElmMinus(i) sends lambda_i to
// 1 + mu_i - lambda_i with mu_i + 1 and deg - 1; ElmPlus(i) sends it to
// mu_i - lambda_i with mu_i - 1 and deg + 1; Tensor shifts lambda by nu,
// mu by 2 nu (which must stay integral) and deg by twice the twist degree;
// Swap(i) replaces lambda_i by mu_i - lambda_i.
template <class S>
BookkeepingDelta<S> elm_bookkeeping(const TransformKind& kind, const std::vector<S>& lambda,
                                    const std::vector<long>& mu, long deg_line);

// Re-marks pole i with the complementary exponent mu_i - lambda_i and its
// eigenline.  Resonant poles (lambda_i = mu_i - lambda_i) are left alone.
// Involutive: a second swap restores the original datum bit for bit.
ParabolicConnection swap_parabolic(const ParabolicConnection& c, int i);

// z-rational gauge N(z)/den(z) with det N / den^2 = (z - t_i)/(z - t_j).
struct GaugeTransformation {
    Mat2 n0, n1;  // numerator N(z) = n0 + z n1
    Poly den;
    int i = -1, j = -1;

    Mat2 at(cplx z) const;  // N(z)/den(z)
};

struct SchlesingerResult {
    ParabolicConnection conn;
    GaugeTransformation gauge;
};

// Degree-preserving rational gauge moving the marked exponents to
// (1 + mu_i - lambda_i, mu_j - lambda_j) while fixing every pole position
// and the monodromy up to constant conjugation.  i and j must be distinct
// finite poles; throws numerical_error when the complementary eigenlines at
// t_i and t_j coincide (the projector degenerates).
SchlesingerResult schlesinger_transform(const ParabolicConnection& c, int i, int j);

// Affine map on the exponent vector with exact rational coefficients.
struct AffineMapOnLambda {
    std::vector<RatVec> linear;  // rows
    RatVec shift;

    int n() const { return static_cast<int>(shift.size()); }
    static AffineMapOnLambda identity(int n);
    RatVec operator()(const RatVec& x) const;
    std::vector<cplx> operator()(const std::vector<cplx>& x) const;
    // (f.after(g))(x) = f(g(x))
    AffineMapOnLambda after(const AffineMapOnLambda& g) const;
    bool operator==(const AffineMapOnLambda& o) const;
};

// Reflection group of the four-pole exponent space: s_k (k = 1..4) flips
// lambda_k; s_0 sends every coordinate to lambda_i - (sum lambda)/2 + 1/2,
// fixing the plane sum = 1 pointwise.
AffineMapOnLambda weyl_generator(int k);
RatVec weyl_apply(const std::vector<int>& word, const RatVec& lambda);
std::vector<cplx> weyl_apply(const std::vector<int>& word, const std::vector<cplx>& lambda);

// Exponent shift group for n poles: add_one adds 1 at pole i; add_half_pair
// adds 1/2 at poles i and j; flip_pair negates-and-shifts the pair;
// flip_one negates pole i.  The last pole carries the shifted forms
// (3/2 in flip_pair, 1 - lambda in flip_one).
struct BlGenerator {
    enum Kind { add_one, add_half_pair, flip_pair, flip_one } kind = add_one;
    int i = 0, j = 0;
};

AffineMapOnLambda bl_generator(const BlGenerator& g, int n);
RatVec bl_apply(const BlGenerator& g, const RatVec& lambda);
std::vector<cplx> bl_apply(const BlGenerator& g, const std::vector<cplx>& lambda);

} // namespace isomon
