#include "isomon/systemio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "isomon/errors.hpp"

namespace isomon {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// validation tolerance applied to parsed files, relative to the system scale
constexpr double kParseTol = 1e-9;

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
    throw validation_error(path + ": " + what);
}

std::string idx(const std::string& field, size_t i) {
    return field + "[" + std::to_string(i) + "]";
}

double get_real(const json& j, const std::string& path) {
    if (!j.is_number()) field_error(path, "expected a number");
    return j.get<double>();
}

cplx get_complex(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        field_error(path, "expected a complex number as [re, im]");
    return cplx(j[0].get<double>(), j[1].get<double>());
}

Rat get_rational(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
        !j[1].is_number_integer())
        field_error(path, "expected a rational number as [num, den]");
    const long den = j[1].get<long>();
    if (den == 0) field_error(path, "zero denominator");
    return rat(j[0].get<long>(), den);
}

long get_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) field_error(path, "expected an integer");
    return j.get<long>();
}

SpherePoint get_point(const json& j, const std::string& path) {
    if (j.is_string()) {
        if (j.get<std::string>() != "inf")
            field_error(path, "expected [re, im] or \"inf\"");
        return SpherePoint::infinity();
    }
    return SpherePoint::finite(get_complex(j, path));
}

Mat2 get_residue(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2)
        field_error(path, "expected a 2x2 matrix as two rows of [re, im] entries");
    Mat2 m;
    cplx* slot[2][2] = {{&m.a, &m.b}, {&m.c, &m.d}};
    for (size_t r = 0; r < 2; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != 2)
            field_error(idx(path, r), "expected a row of two [re, im] entries");
        for (size_t c = 0; c < 2; ++c)
            *slot[r][c] = get_complex(row[c], idx(idx(path, r), c));
    }
    return m;
}

const json& require(const json& root, const char* key) {
    auto it = root.find(key);
    if (it == root.end()) field_error(key, "missing required field");
    return *it;
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void append_complex_cells(std::string& out, cplx z) {
    out += ',';
    out += fmt17(z.real());
    out += ',';
    out += fmt17(z.imag());
}

ordered_json complex_json(cplx z) { return ordered_json::array({z.real(), z.imag()}); }

ordered_json rational_json(const Rat& q) {
    return ordered_json::array({q.get_num().get_si(), q.get_den().get_si()});
}

// pair labels follow the fingerprint order: lexicographic over the first
// n-1 loops, except that four poles use the cubic-surface labels x1..x3
std::vector<std::string> pair_labels(int n) {
    if (n == 4) return {"x1", "x2", "x3"};
    std::vector<std::string> out;
    for (int i = 1; i + 1 < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out.push_back("x" + std::to_string(i) + std::to_string(j));
    return out;
}

} // namespace

SystemSpec parse_system_text(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // recover line/column from the byte offset; the library's own message
        // repeats them but a file position up front keeps errors greppable
        size_t line = 1, col = 1;
        for (size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << origin << ":" << line << ":" << col << ": " << e.what();
        throw validation_error(os.str());
    }
    if (!root.is_object()) throw validation_error(origin + ": top level must be an object");

    if (get_integer(require(root, "version"), "version") != 1)
        field_error("version", "unsupported format version (expected 1)");

    static const char* known[] = {"version", "points",  "residues",  "lambda",
                                  "mu",      "degL",    "weight",    "tolerances"};
    for (auto it = root.begin(); it != root.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) field_error(it.key(), "unknown field");
    }

    const json& jpoints = require(root, "points");
    const json& jres = require(root, "residues");
    const json& jlambda = require(root, "lambda");
    const json& jmu = require(root, "mu");
    if (!jpoints.is_array()) field_error("points", "expected an array");
    if (!jres.is_array()) field_error("residues", "expected an array");
    if (!jlambda.is_array()) field_error("lambda", "expected an array");
    if (!jmu.is_array()) field_error("mu", "expected an array");

    const size_t n = jpoints.size();
    if (jres.size() != n || jlambda.size() != n || jmu.size() != n)
        field_error("residues", "points, residues, lambda and mu must have equal length");

    FuchsianSystem sys;
    for (size_t i = 0; i < n; ++i) sys.poles.push_back(get_point(jpoints[i], idx("points", i)));
    for (size_t i = 0; i < n; ++i) sys.residues.push_back(get_residue(jres[i], idx("residues", i)));

    // name both offenders before the connection validator folds them into one report
    const double scale = sys.scale();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            const bool both_inf = sys.poles[i].at_infinity && sys.poles[j].at_infinity;
            const bool same_z = !sys.poles[i].at_infinity && !sys.poles[j].at_infinity &&
                                std::abs(sys.poles[i].z - sys.poles[j].z) <= kParseTol * scale;
            if (both_inf || same_z)
                field_error(idx("points", i),
                            "names the same marked point as " + idx("points", j));
        }

    std::vector<cplx> lambda;
    std::vector<long> mu;
    for (size_t i = 0; i < n; ++i) lambda.push_back(get_complex(jlambda[i], idx("lambda", i)));
    for (size_t i = 0; i < n; ++i) mu.push_back(get_integer(jmu[i], idx("mu", i)));

    SystemSpec s;
    const long deg_line = get_integer(require(root, "degL"), "degL");
    s.conn = make_connection(std::move(sys), std::move(lambda), std::move(mu), deg_line);

    if (auto it = root.find("weight"); it != root.end()) {
        if (!it->is_array() || it->size() != 2 * n)
            field_error("weight", "expected " + std::to_string(2 * n) + " rationals");
        for (size_t i = 0; i < it->size(); ++i)
            s.weight.alpha.push_back(get_rational((*it)[i], idx("weight", i)));
    } else {
        s.weight.alpha.assign(2 * n, rat(0));
    }

    if (auto it = root.find("tolerances"); it != root.end()) {
        if (!it->is_object()) field_error("tolerances", "expected an object");
        for (auto f = it->begin(); f != it->end(); ++f) {
            const std::string path = "tolerances." + f.key();
            double v = get_real(*f, path);
            if (!(v > 0.0)) field_error(path, "must be positive");
            if (f.key() == "integration") {
                s.integration_tol = v;
                s.integration_set = true;
            } else if (f.key() == "verification") {
                s.verification_tol = v;
                s.verification_set = true;
            } else {
                field_error(path, "unknown field");
            }
        }
    }

    validate_system(s.conn, kParseTol, &s.weight);
    return s;
}

SystemSpec parse_system_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_system_text(buf.str(), path);
}

std::string emit_system_json(const SystemSpec& s) {
    ordered_json root;
    root["version"] = 1;
    auto& points = root["points"] = ordered_json::array();
    for (const auto& p : s.conn.sys.poles)
        points.push_back(p.at_infinity ? ordered_json("inf") : complex_json(p.z));
    auto& res = root["residues"] = ordered_json::array();
    for (const auto& m : s.conn.sys.residues)
        res.push_back(ordered_json::array(
            {ordered_json::array({complex_json(m.a), complex_json(m.b)}),
             ordered_json::array({complex_json(m.c), complex_json(m.d)})}));
    auto& lambda = root["lambda"] = ordered_json::array();
    for (const auto& l : s.conn.lambda) lambda.push_back(complex_json(l));
    root["mu"] = s.conn.mu;
    root["degL"] = s.conn.deg_line;
    auto& weight = root["weight"] = ordered_json::array();
    for (const auto& q : s.weight.alpha) weight.push_back(rational_json(q));
    root["tolerances"] = {{"integration", s.integration_tol},
                          {"verification", s.verification_tol}};
    return root.dump(2) + "\n";
}

std::string emit_flow_csv(const std::vector<FlowCsvRow>& rows) {
    if (rows.empty()) throw validation_error("flow table has no samples");
    const size_t na = rows[0].a.size();
    const size_t nx = rows[0].x.size();
    const auto labels = pair_labels(static_cast<int>(na));
    if (labels.size() != nx)
        throw validation_error("flow table has inconsistent trace columns");

    std::string out = "s,t_moving_re,t_moving_im";
    for (size_t i = 1; i <= na; ++i) {
        out += ",a" + std::to_string(i) + "_re";
        out += ",a" + std::to_string(i) + "_im";
    }
    for (const auto& l : labels) out += "," + l + "_re," + l + "_im";
    out += ",y_re,y_im,eig_drift,trace_drift\n";

    for (const auto& r : rows) {
        if (r.a.size() != na || r.x.size() != nx)
            throw validation_error("flow table has ragged rows");
        out += fmt17(r.s);
        append_complex_cells(out, r.t_moving);
        for (cplx v : r.a) append_complex_cells(out, v);
        for (cplx v : r.x) append_complex_cells(out, v);
        if (r.y_defined) {
            append_complex_cells(out, r.y);
        } else {
            out += ",,";  // no apparent singularity at this sample
        }
        out += ',';
        out += fmt17(r.eig_drift);
        out += ',';
        out += fmt17(r.trace_drift);
        out += '\n';
    }
    return out;
}

std::string emit_traces_csv(const TraceCoordinates& tc) {
    std::string out = "name,value_re,value_im\n";
    auto row = [&](const std::string& name, cplx v) {
        out += name;
        append_complex_cells(out, v);
        out += '\n';
    };
    for (size_t i = 0; i < tc.a.size(); ++i) row("a" + std::to_string(i + 1), tc.a[i]);
    const auto labels = pair_labels(tc.n);
    std::vector<cplx> pairs = tc.pair;
    if (tc.n == 4) {
        const auto x = tc.fricke_x();
        pairs.assign(x.begin(), x.end());
    }
    for (size_t i = 0; i < pairs.size() && i < labels.size(); ++i) row(labels[i], pairs[i]);
    size_t t = 0;
    for (int i = 1; i + 2 < tc.n; ++i)
        for (int j = i + 1; j + 1 < tc.n; ++j)
            for (int k = j + 1; k < tc.n && t < tc.triple.size(); ++k)
                row("x" + std::to_string(i) + std::to_string(j) + std::to_string(k),
                    tc.triple[t++]);
    return out;
}

std::string emit_singular_points_csv(const std::vector<std::array<cplx, 3>>& pts) {
    std::string out = "x1_re,x1_im,x2_re,x2_im,x3_re,x3_im\n";
    for (const auto& p : pts) {
        std::string line;
        for (cplx v : p) append_complex_cells(line, v);
        out += line.substr(1);
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex_digest(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace isomon
