// Times the OpenMP-parallel kernels against their serial reference paths and
// verifies both produce bitwise-identical results.  Usage:
//
//   bench_kernels [--jobs N] [--reps R]
//
// With one hardware thread (or a non-OpenMP build) the parallel path degrades
// to the serial one, so parity rather than speedup is the expected outcome.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "isomon/character_variety.hpp"
#include "isomon/isomonodromy.hpp"
#include "isomon/monodromy.hpp"
#include "isomon/parallel.hpp"
#include "isomon/rng.hpp"

using namespace isomon;

namespace {

using bench_clock = std::chrono::steady_clock;

template <class F>
double best_ms(int reps, F&& body) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = bench_clock::now();
        body();
        const double ms =
            std::chrono::duration<double, std::milli>(bench_clock::now() - t0).count();
        best = std::min(best, ms);
    }
    return best;
}

bool bitwise_equal(const Mat2& x, const Mat2& y) {
    return x.a == y.a && x.b == y.b && x.c == y.c && x.d == y.d;
}

// real poles, traceless residues with positive random entries; the entry
// range shrinks with the pole count so the balancing residue stays tame
ParabolicConnection tame_system(uint64_t seed, int n) {
    Rng rng(seed);
    FuchsianSystem sys;
    for (int k = 0; k < n; ++k) sys.poles.push_back(SpherePoint::finite(1.1 * k));
    Mat2 total = Mat2::zero();
    const double cap = 3.0 / (n - 1);
    for (int k = 0; k < n - 1; ++k) {
        Mat2 a{rng.uniform(0.25 * cap, 0.7 * cap), rng.uniform(0.25 * cap, 0.7 * cap),
               rng.uniform(0.25 * cap, 0.7 * cap), 0.0};
        a.d = -a.a;
        sys.residues.push_back(a);
        total += a;
    }
    sys.residues.push_back(-total);
    std::vector<cplx> lambda;
    for (const Mat2& a : sys.residues) lambda.push_back(eigenvalues(a)[0]);
    return make_connection(sys, lambda, std::vector<long>(n, 0), 0);
}

void row(const char* name, int items, double serial_ms, double par_ms, bool exact) {
    std::printf("%-28s %6d %12.2f %12.2f %9.2fx   %s\n", name, items, serial_ms, par_ms,
                serial_ms / par_ms, exact ? "exact" : "MISMATCH");
}

} // namespace

int main(int argc, char** argv) {
    int jobs = hardware_jobs();
    int reps = 3;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--jobs") && i + 1 < argc)
            jobs = std::atoi(argv[++i]);
        else if (!std::strcmp(argv[i], "--reps") && i + 1 < argc)
            reps = std::atoi(argv[++i]);
        else {
            std::fprintf(stderr, "usage: %s [--jobs N] [--reps R]\n", argv[0]);
            return 1;
        }
    }
    if (jobs < 1 || reps < 1) {
        std::fprintf(stderr, "--jobs and --reps must be positive\n");
        return 1;
    }

    std::printf("openmp %s, %d hardware thread(s), timing with %d job(s), best of %d\n\n",
                openmp_enabled() ? "enabled" : "disabled", hardware_jobs(), jobs, reps);
    std::printf("%-28s %6s %12s %12s %10s   %s\n", "kernel", "items", "serial ms",
                "parallel ms", "speedup", "results");
    bool all_exact = true;

    {
        // lasso transports inside one monodromy computation
        const ParabolicConnection c = tame_system(71, 7);
        MonodromyRep serial, par;
        const double s_ms = best_ms(reps, [&] { serial = compute_monodromy(c, 1e-10, 1e-6, 1); });
        const double p_ms =
            best_ms(reps, [&] { par = compute_monodromy(c, 1e-10, 1e-6, jobs); });
        bool exact = serial.m.size() == par.m.size();
        for (size_t k = 0; exact && k < serial.m.size(); ++k)
            exact = bitwise_equal(serial.m[k], par.m[k]);
        row("monodromy lassos", static_cast<int>(serial.m.size()) - 1, s_ms, p_ms, exact);
        all_exact = all_exact && exact;
    }

    {
        // fingerprints along the samples of one deformation flow
        const ParabolicConnection c = tame_system(72, 4);
        FlowOptions opt;
        opt.samples = 17;
        const FlowResult fr = integrate_flow(c.sys, FlowPath{{2}, {cplx(0.5)}}, opt);
        const int n = static_cast<int>(fr.s.size());

        auto fingerprints = [&](int sweep_jobs) {
            std::vector<std::vector<cplx>> out(n);
            parallel_for(n, sweep_jobs, [&](int k) {
                const FuchsianSystem at = flow_system_at(fr, k);
                const auto conn = make_connection(at, c.lambda, c.mu, c.deg_line);
                MonodromyRep rep = compute_monodromy(conn);
                RepTuple tup;
                tup.m.assign(rep.m.begin(), rep.m.end() - 1);
                out[k] = invariant_fingerprint(tup).flat();
            });
            return out;
        };
        std::vector<std::vector<cplx>> serial, par;
        const double s_ms = best_ms(reps, [&] { serial = fingerprints(1); });
        const double p_ms = best_ms(reps, [&] { par = fingerprints(jobs); });
        bool exact = true;
        for (int k = 0; k < n; ++k)
            for (size_t i = 0; i < serial[k].size(); ++i)
                exact = exact && serial[k][i] == par[k][i];
        row("flow sample fingerprints", n, s_ms, p_ms, exact);
        all_exact = all_exact && exact;
    }

    {
        // batch of seeded fiber samples on the trace variety
        const std::vector<cplx> a = mu_map({0.11, 0.23, 0.37, 0.41});
        const int count = 64;
        auto batch = [&](int sweep_jobs) {
            std::vector<RepTuple> out(count);
            parallel_for(count, sweep_jobs,
                         [&](int k) { out[k] = sample_fiber_point(a, 7000 + k); });
            return out;
        };
        std::vector<RepTuple> serial, par;
        const double s_ms = best_ms(reps, [&] { serial = batch(1); });
        const double p_ms = best_ms(reps, [&] { par = batch(jobs); });
        bool exact = true;
        for (int k = 0; k < count; ++k)
            for (size_t j = 0; j < serial[k].m.size(); ++j)
                exact = exact && bitwise_equal(serial[k].m[j], par[k].m[j]);
        row("fiber sampling batch", count, s_ms, p_ms, exact);
        all_exact = all_exact && exact;
    }

    if (jobs == 1)
        std::printf("\nnote: 1 job, parallel path falls back to the serial loop; "
                    "speedups near 1.0x are expected\n");
    return all_exact ? 0 : 1;
}
