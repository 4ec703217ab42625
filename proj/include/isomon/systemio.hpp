#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "isomon/character_variety.hpp"
#include "isomon/fuchsian.hpp"

namespace isomon {

// A system file bundles the connection with its parabolic weights and the
// tolerance block; parsing fills missing optional fields with defaults so
// that emit always echoes a complete description.
struct SystemSpec {
    ParabolicConnection conn;
    Weight weight;
    double integration_tol = 1e-10;
    double verification_tol = 1e-6;
    // whether the file carried the value (defaults lose against ISOMON_TOL)
    bool integration_set = false;
    bool verification_set = false;
};

// Parses the JSON description (format version 1) and validates the result
// as a full parabolic connection.  Syntax problems report line and column;
// shape problems report the offending field path; semantic problems come
// from the connection validator (colliding points named pairwise, exponents
// off the residue spectrum, ...).  All throw validation_error.
SystemSpec parse_system_text(const std::string& text,
                             const std::string& origin = "<input>");
SystemSpec parse_system_file(const std::string& path);

// Canonical serialization: fixed key order, reduced weights, 17 significant
// digits.  Idempotent: parse(emit(parse(f))) equals parse(f) bit for bit.
std::string emit_system_json(const SystemSpec& s);

// One flow sample ready for CSV export: measured trace coordinates, the
// apparent-singularity position when defined, and drifts against sample 0.
struct FlowCsvRow {
    double s = 0.0;
    cplx t_moving{0.0};
    std::vector<cplx> a;    // single traces
    std::vector<cplx> x;    // pair traces (four poles: cubic-surface order)
    bool y_defined = false;
    cplx y{0.0};
    double eig_drift = 0.0;
    double trace_drift = 0.0;
};

// Fixed-header CSV streams, every number printed with 17 significant digits
// so identical runs are byte-identical.
std::string emit_flow_csv(const std::vector<FlowCsvRow>& rows);
std::string emit_traces_csv(const TraceCoordinates& tc);
std::string emit_singular_points_csv(const std::vector<std::array<cplx, 3>>& pts);

// FNV-1a digest stamped into run reports to tie outputs to input bytes.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex_digest(std::uint64_t h);

} // namespace isomon
