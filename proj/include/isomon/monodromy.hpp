#pragma once
#include <optional>
#include <vector>

#include "isomon/character_variety.hpp"
#include "isomon/fuchsian.hpp"
#include "isomon/mat2.hpp"

namespace isomon {

// Piecewise path in the punctured plane: straight chords and circular arcs,
// each parametrized over tau in [0,1].
struct Segment {
    bool arc = false;
    cplx a{}, b{};  // chord endpoints
    cplx center{};  // arc data
    double radius = 0.0;
    double theta0 = 0.0;
    double dtheta = 0.0;

    cplx at(double tau) const;
    cplx velocity(double tau) const;
    cplx start() const { return at(0.0); }
    cplx end() const { return at(1.0); }

    static Segment chord(cplx from, cplx to);
    static Segment circle_arc(cplx center, double radius, double theta0, double dtheta);
};

struct Path {
    std::vector<Segment> segs;

    cplx start() const;
    cplx end() const;
    bool closed(double tol = 1e-9) const;
    Path reversed() const;
    void append(const Path& other);
};

// Total signed turning of the path around a point, in full turns; integral
// for closed paths that avoid the point.
double winding_number(const Path& p, cplx point);

// Lassos around the marked points, all based at the same point below the
// cluster.  lassos[k] winds once counterclockwise around points[fan[k]] and
// zero times around the others; the fan is ordered left to right as seen
// from the basepoint, so the product lassos[0]...lassos[m-1] of transport
// matrices is the identity.  moves records the adjacent regroupings
// (k) : (g_k, g_{k+1}) -> (g_k g_{k+1} g_k^{-1}, g_k)
// that, applied in order, rewrite the fan-ordered system into one indexed by
// the caller's point order while preserving the product relation.
struct LoopBasis {
    cplx basepoint{};
    double radius = 0.0;
    std::vector<cplx> points;  // caller order
    std::vector<Path> lassos;  // fan order
    std::vector<int> fan;      // lassos[k] encircles points[fan[k]]
    std::vector<int> moves;
};

// Builds the lasso basis with safety radius 0.1 x the smallest pairwise gap.
// Throws numerical_error when that radius underflows and validation_error
// when a supplied basepoint sits on top of the cluster.
LoopBasis canonical_loops(const std::vector<cplx>& points,
                          std::optional<cplx> basepoint = std::nullopt);

struct TransportOptions {
    double tol = 1e-10;         // local error target per step
    double initial_step = 0.1;  // in segment parameter units
    int max_steps = 200000;     // per segment
};

struct TransportResult {
    Mat2 value;  // fundamental solution at path end, identity at start
    double step_error = 0.0;  // largest accepted local-error estimate
    double det_drift = 0.0;   // |det Y - exp(integrated trace)|, relative
    long steps = 0;
};

// Parallel transport of the flat sections along the path.  The determinant
// is tracked through the integrated residue trace and cross-checked against
// det Y within 100 x tol; no logarithm branches are involved anywhere.
TransportResult transport(const FuchsianSystem& sys, const Path& path,
                          const TransportOptions& opt = {});

struct MonodromyRep {
    // Matrices ordered: finite poles in the connection's order, then the
    // pole at infinity (if marked) last, where the relation closes up.
    std::vector<Mat2> m;
    std::vector<int> pole_index;  // m[k] belongs to sys.poles[pole_index[k]]
    cplx basepoint{};
    double step_error = 0.0;
    double det_drift = 0.0;
    double relation_error = 0.0;  // |M_1 ... M_n - I|
    double trace_error = 0.0;     // worst |tr M_k - 2cos(2 pi lambda_k)|
};

// Transports every lasso (independent transports run in parallel when jobs
// allows, combined deterministically by index), rewrites the fan order into
// the caller order, and appends the inverse-product matrix for a marked
// infinity.  Verifies |det M - 1|, the product relation and the trace of
// each matrix against the marked exponents within vtol; a violation throws
// numerical_error, which usually signals that tol was too loose.
MonodromyRep compute_monodromy(const ParabolicConnection& c, const LoopBasis& loops,
                               double tol = 1e-10, double vtol = 1e-6, int jobs = 1);
// Same, over canonical_loops of the finite poles.
MonodromyRep compute_monodromy(const ParabolicConnection& c, double tol = 1e-10,
                               double vtol = 1e-6, int jobs = 1);

// Trace coordinates of the monodromy representation.  The single-trace part
// is taken exactly as 2cos(2 pi lambda); pair and triple traces come from
// the transported matrices.
TraceCoordinates riemann_hilbert(const ParabolicConnection& c, double tol = 1e-10,
                                 double vtol = 1e-6, int jobs = 1);

} // namespace isomon
