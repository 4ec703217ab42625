#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "isomon/character_variety.hpp"
#include "isomon/errors.hpp"
#include "isomon/fuchsian.hpp"
#include "isomon/isomonodromy.hpp"
#include "isomon/monodromy.hpp"
#include "isomon/parallel.hpp"
#include "isomon/systemio.hpp"
#include "isomon/transformations.hpp"

using namespace isomon;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json complex_out(cplx z) { return ordered_json::array({z.real(), z.imag()}); }

ordered_json mat_out(const Mat2& m) {
    return ordered_json::array({ordered_json::array({complex_out(m.a), complex_out(m.b)}),
                                ordered_json::array({complex_out(m.c), complex_out(m.d)})});
}

ordered_json complex_list_out(const std::vector<cplx>& v) {
    ordered_json a = ordered_json::array();
    for (cplx z : v) a.push_back(complex_out(z));
    return a;
}

// "re", "re,im" or "[re,im]"
cplx parse_complex_arg(std::string s, const std::string& flag) {
    std::string cleaned;
    for (char c : s)
        if (c != ' ' && c != '[' && c != ']') cleaned += c;
    const auto bad = [&]() -> cplx {
        throw validation_error(flag + ": expected re or re,im, got '" + s + "'");
    };
    if (cleaned.empty()) return bad();
    double re = 0.0, im = 0.0;
    size_t used = 0;
    try {
        re = std::stod(cleaned, &used);
    } catch (const std::exception&) {
        return bad();
    }
    if (used < cleaned.size()) {
        if (cleaned[used] != ',') return bad();
        std::string rest = cleaned.substr(used + 1);
        size_t used2 = 0;
        try {
            im = std::stod(rest, &used2);
        } catch (const std::exception&) {
            return bad();
        }
        if (used2 != rest.size()) return bad();
    }
    return cplx(re, im);
}

// JSON array of numbers or [re, im] pairs
std::vector<cplx> parse_complex_list(const std::string& s, const std::string& flag) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(s);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(flag + ": " + e.what());
    }
    if (!j.is_array()) throw validation_error(flag + ": expected a JSON array");
    std::vector<cplx> out;
    for (const auto& e : j) {
        if (e.is_number()) {
            out.emplace_back(e.get<double>(), 0.0);
        } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
            out.emplace_back(e[0].get<double>(), e[1].get<double>());
        } else {
            throw validation_error(flag + ": entries must be numbers or [re, im] pairs");
        }
    }
    return out;
}

// JSON array of integers or [num, den] pairs
RatVec parse_rational_list(const std::string& s, const std::string& flag) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(s);
    } catch (const nlohmann::json::parse_error& e) {
        throw validation_error(flag + ": " + e.what());
    }
    if (!j.is_array()) throw validation_error(flag + ": expected a JSON array");
    RatVec out;
    for (const auto& e : j) {
        if (e.is_number_integer()) {
            out.push_back(rat(e.get<long>()));
        } else if (e.is_array() && e.size() == 2 && e[0].is_number_integer() &&
                   e[1].is_number_integer() && e[1].get<long>() != 0) {
            out.push_back(rat(e[0].get<long>(), e[1].get<long>()));
        } else {
            throw validation_error(flag + ": entries must be integers or [num, den] pairs");
        }
    }
    return out;
}

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Tolerances {
    double integration = 1e-10;
    double verification = 1e-6;
};

// precedence: --tol flag, then the file's block, then ISOMON_TOL (verification
// only), then the built-in defaults
Tolerances resolve_tolerances(const SystemSpec* spec, std::optional<double> flag_tol) {
    Tolerances t;
    if (const char* env = std::getenv("ISOMON_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end == env || *end != '\0' || !(v > 0.0))
            throw validation_error(std::string("ISOMON_TOL: not a positive number: ") + env);
        t.verification = v;
    }
    if (spec) {
        if (spec->integration_set) t.integration = spec->integration_tol;
        if (spec->verification_set) t.verification = spec->verification_tol;
    }
    if (flag_tol) {
        if (!(*flag_tol > 0.0)) throw validation_error("--tol must be positive");
        t.integration = *flag_tol;
    }
    return t;
}

struct Ctx {
    ordered_json report;
    std::string artifact;      // primary artifact bytes (CSV or canonical file)
    std::string artifact_key;  // outputs key when no --out is given
    std::string out_path;
    std::uint64_t seed = 0;
};

SystemSpec load_system(Ctx& ctx, const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    ctx.report["inputs"]["file"] = path;
    ctx.report["inputs"]["digest"] = "fnv1a:" + hex_digest(fnv1a64(bytes));
    SystemSpec s = parse_system_text(bytes, path);
    const Diagnostics d = diagnose(s.conn, 1e-9, &s.weight);
    if (!d.warnings.empty()) ctx.report["diagnostics"]["warnings"] = d.warnings;
    return s;
}

int run_command(const std::string& name, const std::string& out_path, std::uint64_t seed,
                const std::function<void(Ctx&)>& body) {
    Ctx ctx;
    ctx.out_path = out_path;
    ctx.seed = seed;
    ctx.report["command"] = name;
    ctx.report["inputs"] = ordered_json::object();
    ctx.report["outputs"] = ordered_json::object();
    ctx.report["outputs"]["seed"] = seed;
    ctx.report["diagnostics"] = ordered_json::object();

    int code = 0;
    auto record = [&](const char* kind, const std::exception& e) {
        ctx.report["diagnostics"]["error"] = e.what();
        ctx.report["diagnostics"]["kind"] = kind;
    };
    try {
        body(ctx);
    } catch (const validation_error& e) {
        code = 1;
        record("validation", e);
    } catch (const numerical_error& e) {
        code = 2;
        record("numerical", e);
    } catch (const undetermined_error& e) {
        code = 3;
        record("undetermined", e);
    } catch (const std::exception& e) {
        code = 2;
        record("internal", e);
    }

    if (code == 0 && !ctx.artifact_key.empty()) {
        if (ctx.out_path.empty()) {
            ctx.report["outputs"][ctx.artifact_key] = ctx.artifact;
        } else {
            std::ofstream out(ctx.out_path, std::ios::binary);
            if (out) out << ctx.artifact;
            if (!out) {
                code = 1;
                ctx.report["diagnostics"]["error"] = "cannot write " + ctx.out_path;
                ctx.report["diagnostics"]["kind"] = "validation";
            } else {
                ctx.report["outputs"]["path"] = ctx.out_path;
                ctx.report["outputs"]["artifact_digest"] =
                    "fnv1a:" + hex_digest(fnv1a64(ctx.artifact));
            }
        }
    }
    ctx.report["exit_status"] = code;

    const std::string text = ctx.report.dump(2) + "\n";
    std::cout << text;
    // commands without a separate artifact can still persist their report
    if (code == 0 && ctx.artifact_key.empty() && !ctx.out_path.empty()) {
        std::ofstream out(ctx.out_path, std::ios::binary);
        out << text;
    }
    return code;
}

// worst pairing-aware eigenvalue movement across the residue list
double spectral_drift(const std::vector<Mat2>& now, const std::vector<Mat2>& ref) {
    double worst = 0.0;
    for (size_t i = 0; i < now.size() && i < ref.size(); ++i) {
        const auto e = eigenvalues(now[i]);
        const auto f = eigenvalues(ref[i]);
        const double direct = std::max(std::abs(e[0] - f[0]), std::abs(e[1] - f[1]));
        const double crossed = std::max(std::abs(e[0] - f[1]), std::abs(e[1] - f[0]));
        worst = std::max(worst, std::min(direct, crossed));
    }
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rank-2 logarithmic connections: validation, monodromy, "
                 "character-variety coordinates and isomonodromic flows"};
    app.require_subcommand(1);

    int exit_code = 0;

    // ---- validate ----------------------------------------------------
    std::string v_file, v_out;
    auto* v = app.add_subcommand("validate", "check a system file and echo its canonical form");
    v->add_option("file", v_file, "system file (JSON)")->required();
    v->add_option("--out", v_out, "write the canonical file here");
    v->callback([&] {
        exit_code = run_command("validate", v_out, 0, [&](Ctx& ctx) {
            SystemSpec s = load_system(ctx, v_file);
            ctx.report["outputs"]["n"] = s.conn.n();
            ctx.report["outputs"]["degL"] = s.conn.deg_line;
            ctx.artifact = emit_system_json(s);
            ctx.artifact_key = "system";
        });
    });

    // ---- exponents ---------------------------------------------------
    std::string e_file, e_out;
    auto* ex = app.add_subcommand("exponents", "local exponent table and the degree relation");
    ex->add_option("file", e_file, "system file (JSON)")->required();
    ex->add_option("--out", e_out, "write the report here");
    ex->callback([&] {
        exit_code = run_command("exponents", e_out, 0, [&](Ctx& ctx) {
            SystemSpec s = load_system(ctx, e_file);
            const ExponentData e = local_exponents(s.conn);
            ordered_json rows = ordered_json::array();
            for (size_t i = 0; i < e.rows.size(); ++i) {
                const auto& r = e.rows[i];
                const auto& p = s.conn.sys.poles[i];
                ordered_json row;
                row["point"] = p.at_infinity ? ordered_json("inf") : complex_out(p.z);
                row["lambda"] = complex_out(r.lambda);
                row["complement"] = complex_out(r.other);
                row["realized"] =
                    ordered_json::array({complex_out(r.realized[0]), complex_out(r.realized[1])});
                row["mismatch"] = r.mismatch;
                rows.push_back(row);
            }
            ctx.report["outputs"]["rows"] = rows;
            ctx.report["outputs"]["sum_mu"] = e.sum_mu;
            ctx.report["outputs"]["degL"] = e.deg_line;
            ctx.report["outputs"]["degree_relation_ok"] = e.fuchs_ok;
        });
    });

    // ---- classify ----------------------------------------------------
    std::string c_file, c_out;
    std::optional<double> c_tol;
    auto* cl = app.add_subcommand("classify", "resonance and reducibility walls of the exponents");
    cl->add_option("file", c_file, "system file (JSON)")->required();
    cl->add_option("--tol", c_tol, "wall detection tolerance (default 1e-9)");
    cl->add_option("--out", c_out, "write the report here");
    cl->callback([&] {
        exit_code = run_command("classify", c_out, 0, [&](Ctx& ctx) {
            SystemSpec s = load_system(ctx, c_file);
            const double tol = c_tol.value_or(1e-9);
            if (!(tol > 0.0)) throw validation_error("--tol must be positive");
            ctx.report["inputs"]["tol"] = tol;
            const LambdaClassification r = classify_lambda(s.conn.lambda, tol);
            auto& out = ctx.report["outputs"];
            out["resonant"] = r.resonant;
            ordered_json ri = ordered_json::array();
            for (int i : r.resonant_indices) ri.push_back(i + 1);
            out["resonant_poles"] = ri;
            out["reducible"] = r.reducible;
            ordered_json ws = ordered_json::array();
            for (const auto& w : r.witnesses) {
                ordered_json jw;
                jw["signs"] = w.signs;
                jw["level"] = w.level;
                ws.push_back(jw);
            }
            out["witnesses"] = ws;
            out["special"] = r.special;
            out["walls"] = r.wall_labels;
        });
    });

    // ---- stability ---------------------------------------------------
    std::string st_file, st_out;
    std::optional<double> st_tol;
    auto* st = app.add_subcommand("stability", "parabolic stability of the marked connection");
    st->add_option("file", st_file, "system file (JSON)")->required();
    st->add_option("--tol", st_tol, "subbundle search tolerance (default 1e-9)");
    st->add_option("--out", st_out, "write the report here");
    st->callback([&] {
        exit_code = run_command("stability", st_out, 0, [&](Ctx& ctx) {
            SystemSpec s = load_system(ctx, st_file);
            const double tol = st_tol.value_or(1e-9);
            if (!(tol > 0.0)) throw validation_error("--tol must be positive");
            ctx.report["inputs"]["tol"] = tol;
            const StabilityResult r = check_stability(s.conn, s.weight, tol);
            auto& out = ctx.report["outputs"];
            out["verdict"] =
                r.stable ? "stable" : (r.strictly_semistable ? "strictly-semistable" : "unstable");
            out["par_deg"] = to_string(r.par_deg);
            out["threshold"] = to_string(r.threshold);
            out["degree_bound"] = r.degree_bound;
            ordered_json ws = ordered_json::array();
            for (size_t i = 0; i < r.witnesses.size() && i < 8; ++i) {
                const auto& w = r.witnesses[i];
                ordered_json jw;
                jw["deg"] = w.sub.deg;
                jw["par_deg"] = to_string(w.par_deg);
                jw["aligned"] = w.aligned;
                jw["chi"] = complex_list_out(w.sub.chi);
                jw["family_dim"] = w.sub.family_dim;
                ws.push_back(jw);
            }
            out["witnesses"] = ws;
        });
    });

    // ---- monodromy ---------------------------------------------------
    std::string m_file, m_out;
    std::optional<double> m_tol;
    int m_jobs = 1;
    auto* mo = app.add_subcommand("monodromy", "monodromy matrices around every marked point");
    mo->add_option("file", m_file, "system file (JSON)")->required();
    mo->add_option("--tol", m_tol, "integrator tolerance (default 1e-10)");
    mo->add_option("--jobs", m_jobs, "parallel transports")->check(CLI::PositiveNumber);
    mo->add_option("--out", m_out, "write the report here");
    mo->callback([&] {
        exit_code = run_command("monodromy", m_out, 0, [&](Ctx& ctx) {
            SystemSpec s = load_system(ctx, m_file);
            const Tolerances t = resolve_tolerances(&s, m_tol);
            ctx.report["inputs"]["tol"] = t.integration;
            ctx.report["inputs"]["verification_tol"] = t.verification;
            ctx.report["inputs"]["jobs"] = m_jobs;
            const MonodromyRep rep = compute_monodromy(s.conn, t.integration, t.verification, m_jobs);
            auto& out = ctx.report["outputs"];
            out["basepoint"] = complex_out(rep.basepoint);
            ordered_json ms = ordered_json::array();
            for (size_t k = 0; k < rep.m.size(); ++k) {
                ordered_json jm;
                jm["pole"] = rep.pole_index[k] + 1;
                jm["m"] = mat_out(rep.m[k]);
                jm["trace"] = complex_out(tr(rep.m[k]));
                ms.push_back(jm);
            }
            out["matrices"] = ms;
            auto& diag = ctx.report["diagnostics"];
            diag["step_error"] = rep.step_error;
            diag["det_drift"] = rep.det_drift;
            diag["relation_error"] = rep.relation_error;
            diag["trace_error"] = rep.trace_error;
        });
    });

    // ---- traces --------------------------------------------------------
    std::string tr_file, tr_out;
    std::optional<double> tr_tol;
    int tr_jobs = 1;
    auto* tc_cmd = app.add_subcommand("traces", "trace coordinates of the monodromy (CSV)");
    tc_cmd->add_option("file", tr_file, "system file (JSON)")->required();
    tc_cmd->add_option("--tol", tr_tol, "integrator tolerance (default 1e-10)");
    tc_cmd->add_option("--jobs", tr_jobs, "parallel transports")->check(CLI::PositiveNumber);
    tc_cmd->add_option("--out", tr_out, "write the CSV here");
    tc_cmd->callback([&] {
        exit_code = run_command("traces", tr_out, 0, [&](Ctx& ctx) {
            SystemSpec s = load_system(ctx, tr_file);
            const Tolerances t = resolve_tolerances(&s, tr_tol);
            ctx.report["inputs"]["tol"] = t.integration;
            ctx.report["inputs"]["verification_tol"] = t.verification;
            ctx.report["inputs"]["jobs"] = tr_jobs;
            const MonodromyRep rep = compute_monodromy(s.conn, t.integration, t.verification, tr_jobs);
            RepTuple tup;
            tup.m.assign(rep.m.begin(), rep.m.end() - 1);
            const TraceCoordinates tc = invariant_fingerprint(tup);
            ctx.report["outputs"]["n"] = tc.n;
            ctx.report["outputs"]["fingerprint"] = complex_list_out(tc.flat());
            auto& diag = ctx.report["diagnostics"];
            diag["step_error"] = rep.step_error;
            diag["relation_error"] = rep.relation_error;
            diag["trace_error"] = rep.trace_error;
            ctx.artifact = emit_traces_csv(tc);
            ctx.artifact_key = "csv";
        });
    });

    // ---- fricke-singular -----------------------------------------------
    std::string fs_file, fs_a, fs_out;
    std::optional<double> fs_tol;
    auto* fs = app.add_subcommand("fricke-singular",
                                  "singular points of the four-point trace cubic (CSV)");
    fs->add_option("file", fs_file, "system file (JSON); boundary values from its exponents");
    fs->add_option("--a", fs_a, "boundary values as a JSON array of 4 entries");
    fs->add_option("--tol", fs_tol, "Newton acceptance tolerance (default 1e-9)");
    fs->add_option("--out", fs_out, "write the CSV here");
    fs->callback([&] {
        exit_code = run_command("fricke-singular", fs_out, 0, [&](Ctx& ctx) {
            if (fs_file.empty() == fs_a.empty())
                throw validation_error("give either a system file or --a, not both");
            std::vector<cplx> av;
            if (!fs_file.empty()) {
                SystemSpec s = load_system(ctx, fs_file);
                if (s.conn.n() != 4)
                    throw validation_error("the trace cubic needs exactly 4 marked points, got " +
                                           std::to_string(s.conn.n()));
                av = mu_map(s.conn.lambda);
            } else {
                av = parse_complex_list(fs_a, "--a");
                if (av.size() != 4) throw validation_error("--a: expected 4 entries");
            }
            const double tol = fs_tol.value_or(1e-9);
            if (!(tol > 0.0)) throw validation_error("--tol must be positive");
            ctx.report["inputs"]["tol"] = tol;
            ctx.report["inputs"]["a"] = complex_list_out(av);
            const std::array<cplx, 4> a{av[0], av[1], av[2], av[3]};
            const auto pts = find_fricke_singular_points(a, tol);
            ctx.report["outputs"]["count"] = pts.size();
            ctx.artifact = emit_singular_points_csv(pts);
            ctx.artifact_key = "csv";
        });
    });

    // ---- sample-rep ------------------------------------------------------
    std::string sr_a, sr_out;
    std::uint64_t sr_seed = 0;
    int sr_count = 1, sr_jobs = 1;
    auto* sr = app.add_subcommand("sample-rep", "sample representations with prescribed traces");
    sr->add_option("--a", sr_a, "trace targets as a JSON array (a_n = product trace)")->required();
    sr->add_option("--seed", sr_seed, "base RNG seed; sample k uses seed+k");
    sr->add_option("--count", sr_count, "number of samples")->check(CLI::PositiveNumber);
    sr->add_option("--jobs", sr_jobs, "parallel samples")->check(CLI::PositiveNumber);
    sr->add_option("--out", sr_out, "write the report here");
    sr->callback([&] {
        exit_code = run_command("sample-rep", sr_out, sr_seed, [&](Ctx& ctx) {
            const std::vector<cplx> a = parse_complex_list(sr_a, "--a");
            ctx.report["inputs"]["a"] = complex_list_out(a);
            ctx.report["inputs"]["seed"] = sr_seed;
            ctx.report["inputs"]["count"] = sr_count;
            ctx.report["inputs"]["jobs"] = sr_jobs;

            std::vector<RepTuple> reps(sr_count);
            std::vector<std::exception_ptr> errors(sr_count);
            parallel_for(sr_count, sr_jobs, [&](int k) {
                try {
                    reps[k] = sample_fiber_point(a, sr_seed + static_cast<std::uint64_t>(k));
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
            for (int k = 0; k < sr_count; ++k)
                if (errors[k]) std::rethrow_exception(errors[k]);

            ordered_json samples = ordered_json::array();
            for (int k = 0; k < sr_count; ++k) {
                const RepTuple& rep = reps[k];
                Mat2 prod = Mat2::identity();
                double resid = 0.0, det_resid = 0.0;
                for (size_t i = 0; i < rep.m.size(); ++i) {
                    resid = std::max(resid, std::abs(tr(rep.m[i]) - a[i]));
                    det_resid = std::max(det_resid, std::abs(det(rep.m[i]) - cplx(1.0)));
                    prod = prod * rep.m[i];
                }
                resid = std::max(resid, std::abs(tr(prod) - a.back()));
                ordered_json js;
                js["seed"] = sr_seed + static_cast<std::uint64_t>(k);
                js["max_trace_residual"] = resid;
                js["max_det_residual"] = det_resid;
                ordered_json ms = ordered_json::array();
                for (const Mat2& m : rep.m) ms.push_back(mat_out(m));
                js["matrices"] = ms;
                samples.push_back(js);
            }
            ctx.report["outputs"]["count"] = sr_count;
            ctx.report["outputs"]["samples"] = samples;
        });
    });

    // ---- transform -------------------------------------------------------
    std::string tf_file, tf_kind, tf_nu, tf_out;
    int tf_i = 0, tf_j = 0;
    long tf_deg = 0;
    auto* tf = app.add_subcommand("transform", "elementary and gauge transformations");
    tf->add_option("file", tf_file, "system file (JSON)")->required();
    tf->add_option("--kind", tf_kind, "elm-plus | elm-minus | tensor | swap | schlesinger")
        ->required();
    tf->add_option("--i", tf_i, "first pole (1-based)");
    tf->add_option("--j", tf_j, "second pole (1-based, schlesinger only)");
    tf->add_option("--nu", tf_nu, "tensor shifts as a JSON array of [num, den]");
    tf->add_option("--deg-twist", tf_deg, "degree of the twisting bundle (tensor)");
    tf->add_option("--out", tf_out, "write the transformed file here");
    tf->callback([&] {
        exit_code = run_command("transform", tf_out, 0, [&](Ctx& ctx) {
            SystemSpec s = load_system(ctx, tf_file);
            ctx.report["inputs"]["kind"] = tf_kind;
            auto& out = ctx.report["outputs"];
            const auto need_i = [&] {
                if (tf_i < 1 || tf_i > s.conn.n())
                    throw validation_error("--i: need a pole between 1 and " +
                                           std::to_string(s.conn.n()));
                ctx.report["inputs"]["i"] = tf_i;
                return tf_i - 1;
            };

            if (tf_kind == "swap") {
                SystemSpec s2 = s;
                s2.conn = swap_parabolic(s.conn, need_i());
                out["lambda"] = complex_list_out(s2.conn.lambda);
                ctx.artifact = emit_system_json(s2);
                ctx.artifact_key = "system";
            } else if (tf_kind == "schlesinger") {
                const int i0 = need_i();
                if (tf_j < 1 || tf_j > s.conn.n())
                    throw validation_error("--j: need a pole between 1 and " +
                                           std::to_string(s.conn.n()));
                ctx.report["inputs"]["j"] = tf_j;
                const SchlesingerResult r = schlesinger_transform(s.conn, i0, tf_j - 1);
                SystemSpec s2 = s;
                s2.conn = r.conn;
                out["lambda"] = complex_list_out(s2.conn.lambda);
                out["mu"] = s2.conn.mu;
                out["degL"] = s2.conn.deg_line;
                ordered_json g;
                g["n0"] = mat_out(r.gauge.n0);
                g["n1"] = mat_out(r.gauge.n1);
                g["den"] = complex_list_out(r.gauge.den);
                out["gauge"] = g;
                ctx.artifact = emit_system_json(s2);
                ctx.artifact_key = "system";
            } else {
                TransformKind kind;
                if (tf_kind == "elm-plus") {
                    kind = TransformKind::ElmPlus(need_i());
                } else if (tf_kind == "elm-minus") {
                    kind = TransformKind::ElmMinus(need_i());
                } else if (tf_kind == "tensor") {
                    if (tf_nu.empty()) throw validation_error("--nu is required for tensor");
                    kind = TransformKind::Tensor(parse_rational_list(tf_nu, "--nu"), tf_deg);
                    ctx.report["inputs"]["deg_twist"] = tf_deg;
                } else {
                    throw validation_error("--kind: unknown transformation '" + tf_kind + "'");
                }
                const auto d = elm_bookkeeping<cplx>(kind, s.conn.lambda, s.conn.mu,
                                                     s.conn.deg_line);
                out["lambda"] = complex_list_out(d.lambda);
                out["mu"] = d.mu;
                out["degL"] = d.deg_line;
                out["note"] = "exponent bookkeeping only; residues unchanged";
            }
        });
    });

    // ---- flow ------------------------------------------------------------
    std::string fl_file, fl_to, fl_out;
    int fl_move = 0, fl_samples = 17, fl_jobs = 1;
    std::optional<double> fl_tol;
    auto* fl = app.add_subcommand("flow", "move one marked point isomonodromically (CSV)");
    fl->add_option("file", fl_file, "system file (JSON)")->required();
    fl->add_option("--move", fl_move, "pole to move (1-based)")->required();
    fl->add_option("--to", fl_to, "target position, re or re,im")->required();
    fl->add_option("--samples", fl_samples, "rows in the table")->check(CLI::PositiveNumber);
    fl->add_option("--tol", fl_tol, "integrator tolerance (default 1e-10)");
    fl->add_option("--jobs", fl_jobs, "parallel per-sample monodromy")->check(CLI::PositiveNumber);
    fl->add_option("--out", fl_out, "write the CSV here");
    fl->callback([&] {
        exit_code = run_command("flow", fl_out, 0, [&](Ctx& ctx) {
            SystemSpec s = load_system(ctx, fl_file);
            const Tolerances t = resolve_tolerances(&s, fl_tol);
            const int n = s.conn.n();
            if (fl_move < 1 || fl_move > n)
                throw validation_error("--move: need a pole between 1 and " + std::to_string(n));
            const int k = fl_move - 1;
            if (s.conn.sys.poles[k].at_infinity)
                throw validation_error("--move: the pole at infinity cannot move");
            const cplx target = parse_complex_arg(fl_to, "--to");
            const cplx disp = target - s.conn.sys.poles[k].z;

            ctx.report["inputs"]["move"] = fl_move;
            ctx.report["inputs"]["to"] = complex_out(target);
            ctx.report["inputs"]["samples"] = fl_samples;
            ctx.report["inputs"]["tol"] = t.integration;
            ctx.report["inputs"]["verification_tol"] = t.verification;
            ctx.report["inputs"]["jobs"] = fl_jobs;

            // fingerprint of one snapshot; a fresh connection per sample keeps
            // the marking data while the residues move
            auto fingerprint = [&](const FuchsianSystem& sys, int jobs) {
                const ParabolicConnection c =
                    make_connection(sys, s.conn.lambda, s.conn.mu, s.conn.deg_line);
                const MonodromyRep rep = compute_monodromy(c, t.integration, t.verification, jobs);
                RepTuple tup;
                tup.m.assign(rep.m.begin(), rep.m.end() - 1);
                return invariant_fingerprint(tup);
            };
            auto to_row = [&](double sval, const FuchsianSystem& sys, const TraceCoordinates& tc,
                              const ApparentSample& y) {
                FlowCsvRow row;
                row.s = sval;
                row.t_moving = sys.poles[k].z;
                row.a = tc.a;
                if (tc.n == 4) {
                    const auto x = tc.fricke_x();
                    row.x.assign(x.begin(), x.end());
                } else {
                    row.x = tc.pair;
                }
                row.y_defined = y.defined;
                row.y = y.y;
                return row;
            };

            std::vector<FlowCsvRow> rows;
            std::vector<std::vector<Mat2>> sampled;  // residues per row, for eig drift
            auto& out = ctx.report["outputs"];
            if (disp == cplx(0.0)) {
                // nothing moves: one row, drifts identically zero
                FlowResult fr;
                fr.initial = s.conn.sys;
                fr.path.moving = {k};
                fr.path.displacement = {cplx(0.0)};
                fr.s = {0.0};
                fr.residues = {s.conn.sys.residues};
                const auto ys = apparent_singularity_trajectory(fr);
                rows.push_back(to_row(0.0, s.conn.sys, fingerprint(s.conn.sys, fl_jobs), ys[0]));
                sampled.push_back(s.conn.sys.residues);
                out["steps"] = 0;
                out["residue_eig_drift"] = 0.0;
                out["residue_trace_drift"] = 0.0;
            } else {
                FlowPath path;
                path.moving = {k};
                path.displacement = {disp};
                FlowOptions opt;
                opt.tol = t.integration;
                opt.samples = fl_samples;
                const FlowResult fr = integrate_flow(s.conn.sys, path, opt);
                const auto ys = apparent_singularity_trajectory(fr);

                const int m = static_cast<int>(fr.s.size());
                std::vector<FuchsianSystem> snaps(m);
                std::vector<TraceCoordinates> tcs(m);
                std::vector<std::exception_ptr> errors(m);
                parallel_for(m, fl_jobs, [&](int idx) {
                    try {
                        snaps[idx] = flow_system_at(fr, idx);
                        tcs[idx] = fingerprint(snaps[idx], fl_jobs > 1 ? 1 : fl_jobs);
                    } catch (...) {
                        errors[idx] = std::current_exception();
                    }
                });
                for (int idx = 0; idx < m; ++idx)
                    if (errors[idx]) std::rethrow_exception(errors[idx]);

                for (int idx = 0; idx < m; ++idx) {
                    rows.push_back(to_row(fr.s[idx], snaps[idx], tcs[idx], ys[idx]));
                    sampled.push_back(snaps[idx].residues);
                }

                out["steps"] = fr.steps;
                out["end_point"] = complex_out(snaps[m - 1].poles[k].z);
                out["residue_eig_drift"] = fr.eig_drift;
                out["residue_trace_drift"] = fr.trace_drift;
                out["residue_sum_drift"] = fr.sum_drift;
            }

            // drift columns compare each sample against the first
            std::vector<cplx> base = rows[0].a;
            base.insert(base.end(), rows[0].x.begin(), rows[0].x.end());
            double worst_trace = 0.0, worst_eig = 0.0;
            int defined = 0;
            for (size_t idx = 0; idx < rows.size(); ++idx) {
                std::vector<cplx> cur = rows[idx].a;
                cur.insert(cur.end(), rows[idx].x.begin(), rows[idx].x.end());
                double d = 0.0;
                for (size_t q = 0; q < cur.size() && q < base.size(); ++q)
                    d = std::max(d, std::abs(cur[q] - base[q]));
                rows[idx].trace_drift = d;
                rows[idx].eig_drift = spectral_drift(sampled[idx], sampled[0]);
                worst_trace = std::max(worst_trace, d);
                worst_eig = std::max(worst_eig, rows[idx].eig_drift);
                defined += rows[idx].y_defined ? 1 : 0;
            }
            out["fingerprint_drift"] = worst_trace;
            out["sampled_eig_drift"] = worst_eig;
            out["apparent_defined"] = defined;

            ctx.artifact = emit_flow_csv(rows);
            ctx.artifact_key = "csv";
        });
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& h) {
        return app.exit(h);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // flag misuse is a validation failure
    }
    return exit_code;
}
