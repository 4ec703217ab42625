#pragma once
#include <vector>

#include "isomon/fuchsian.hpp"
#include "isomon/monodromy.hpp"

namespace isomon {

// The deformation state is a bare Fuchsian system: pole positions plus
// residues.  The parabolic data (lambda, mu, det-line degree) ride along
// unchanged because the flow conserves every residue spectrum.
using SchlesingerState = FuchsianSystem;

// dA_i/ds when pole t_k moves with unit speed: [A_i, A_k]/(t_i - t_k) for
// i != k and -sum of those for i = k.  A pole at infinity contributes no
// term and its residue never moves.
std::vector<Mat2> schlesinger_rhs(const SchlesingerState& state, int moving);
// several poles moving at once superpose linearly; velocity[k] = dt_k/ds
std::vector<Mat2> schlesinger_rhs(const SchlesingerState& state,
                                  const std::vector<cplx>& velocity);

// t_m(s) = t_m(0) + s * displacement for each listed pole, s in [0,1];
// poles not listed stay put.
struct FlowPath {
    std::vector<int> moving;
    std::vector<cplx> displacement;
};

struct FlowOptions {
    double tol = 1e-10;
    int samples = 17;          // recorded grid including both endpoints
    double initial_step = 0.05;
    long max_steps = 200000;
    // abort when two poles get closer than collision_factor * initial min gap
    double collision_factor = 1e-3;
};

struct FlowResult {
    FuchsianSystem initial;
    FlowPath path;
    std::vector<double> s;                    // strictly increasing, 0 .. 1
    std::vector<std::vector<Mat2>> residues;  // one snapshot per sample
    double eig_drift = 0.0;    // worst residue-spectrum movement across samples
    double trace_drift = 0.0;  // worst residue-trace movement
    double sum_drift = 0.0;    // worst movement of the residue sum
    long steps = 0;
};

FlowResult integrate_flow(const SchlesingerState& state, const FlowPath& path,
                          const FlowOptions& opt = {});

// system at the recorded sample: movers displaced along the path, residues
// from the snapshot
FuchsianSystem flow_system_at(const FlowResult& fr, int sample);

struct DriftReport {
    double trace_drift = 0.0;  // max entry difference between the fingerprints
    double eig_drift = 0.0;    // worst residue-spectrum difference
    std::vector<cplx> before, after;  // flattened fingerprints
};

// Recomputes the monodromy fingerprint of both states over freshly built
// canonical loop bases and reports the worst trace drift.  The final state
// reuses the initial marking; its eigenlines are derived from the final
// residues.
DriftReport verify_isomonodromy(const ParabolicConnection& before,
                                const SchlesingerState& after, double tol = 1e-10,
                                double vtol = 1e-6, int jobs = 1);

struct ApparentSample {
    double s = 0.0;
    cplx y{};
    bool defined = false;
};

// Zero locus of the numerator of the (1,2)-entry of B(z), tracked along the
// samples (nearest root to the previous defined sample).  Samples where the
// entry vanishes identically or has no finite root are flagged undefined.
std::vector<ApparentSample> apparent_singularity_trajectory(const FlowResult& fr);

} // namespace isomon
