// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only N] [--cli PATH]
//
// Exit status is 0 only if every selected criterion passes.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "memdrop/kb.hpp"
#include "memdrop/memory.hpp"
#include "memdrop/metrics.hpp"
#include "memdrop/simulator.hpp"
#include "reference/dropout_write.hpp"

using namespace memdrop;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char* spec, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* spec, ...) {
    char buf[512];
    va_list args;
    va_start(args, spec);
    std::vsnprintf(buf, sizeof buf, spec, args);
    va_end(args);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector gaussian(Rng& rng, std::size_t d, double scale = 1.0) {
    Vector v(d);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

Vector random_unit(Rng& rng, std::size_t d) {
    Vector v;
    do v = gaussian(rng, d);
    while (norm(v) < 1e-8);
    return normalized(v);
}

MemoryModule full_random_memory(Rng& rng, std::size_t n, std::size_t d, std::size_t dv) {
    auto mem = init_memory(rng, n, d, dv);
    mem.set_filled(n);
    return mem;
}

// 1 ------------------------------------------------------------------------

Verdict unit_key_invariant() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    std::size_t writes = 0;
    double worst = 0.0;
    while (writes < 10000) {
        const std::size_t n = 1 + rng.index(32), d = 2 + rng.index(31), dv = rng.index(5);
        auto mem = init_memory(rng, n, d, dv);
        for (int t = 0; t < 100 && writes < 10000; ++t, ++writes) {
            const double scale = std::pow(10.0, 6.0 * rng.uniform() - 3.0);
            Vector h;
            do h = gaussian(rng, d, scale);
            while (norm(h) < 1e-6);
            const Vector v = gaussian(rng, dv);
            const double eps = rng.uniform();
            const std::size_t p = 1 + rng.index(n + 2);
            if (rng.uniform() < 0.5)
                write_memory_dropout(mem, rng, h, v, eps, p);
            else
                write_greedy(mem, rng, h, v, eps);
            worst = std::max(worst, mem.max_key_norm_error());
        }
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-6 && secs < 10.0,
            fmt("%zu writes, max | |k|-1 | = %.2e (bound 1e-6), %.2f s (bound 10 s)", writes, worst, secs)};
}

// 2 ------------------------------------------------------------------------

reference::Memory to_reference(const MemoryModule& mem) {
    reference::Memory m;
    for (std::size_t i = 0; i < mem.n_slots(); ++i) {
        m.K.emplace_back(mem.key(i).begin(), mem.key(i).end());
        m.V.emplace_back(mem.value(i).begin(), mem.value(i).end());
        m.A.push_back(mem.age(i));
        m.S.emplace_back(mem.variance(i).begin(), mem.variance(i).end());
    }
    return m;
}

Verdict algorithm_oracle() {
    Rng setup(202);
    std::size_t mismatches = 0;
    double worst = 0.0;
    for (int c = 0; c < 500; ++c) {
        const std::size_t n = 1 + setup.index(16), d = 2 + setup.index(15), dv = setup.index(4);
        auto mem = full_random_memory(setup, n, d, dv);
        const bool tied_ages = setup.uniform() < 0.2;
        for (std::size_t i = 0; i < n; ++i) {
            mem.age(i) = tied_ages ? 5 + setup.index(2) : setup.index(50);
            for (double& s : mem.variance(i)) s = setup.uniform() < 0.2 ? 0.0 : 0.2 * setup.uniform();
            for (double& x : mem.value(i)) x = setup.normal();
        }
        auto ref = to_reference(mem);
        const Vector h = gaussian(setup, d, 0.1 + 3 * setup.uniform());
        const Vector v = gaussian(setup, dv);
        const double r = setup.uniform();
        const double eps = r < 0.15 ? 0.0 : r < 0.3 ? 1.0 : setup.uniform();
        const std::size_t p = 1 + setup.index(n + 2);
        const std::uint64_t seed = setup.index(1u << 30);

        Rng a(seed), b(seed);
        write_memory_dropout(mem, a, h, v, eps, p);
        reference::write_memory_dropout(ref, b, h, v, eps, p);
        bool same = a == b;
        for (std::size_t i = 0; i < n; ++i) {
            same = same && mem.age(i) == ref.A[i];
            same = same && std::equal(mem.value(i).begin(), mem.value(i).end(), ref.V[i].begin());
            for (std::size_t k = 0; k < d; ++k) {
                const double dk = std::abs(mem.key(i)[k] - ref.K[i][k]);
                const double ds = std::abs(mem.variance(i)[k] - ref.S[i][k]);
                worst = std::max({worst, dk, ds});
                same = same && dk <= 1e-12 && ds <= 1e-12;
            }
        }
        mismatches += !same;
    }
    return {mismatches == 0,
            fmt("500 cases at N <= 16: %zu mismatching, max float diff %.2e (bound 1e-12)", mismatches, worst)};
}

// 3 ------------------------------------------------------------------------

Verdict read_oracle() {
    Rng rng(303);
    std::size_t agree = 0, total = 0;
    while (total < 1000) {
        const std::size_t n = 1 + rng.index(64), d = 2 + rng.index(31);
        auto mem = init_memory(rng, n, d, 1);
        const std::size_t warm = rng.index(2 * n + 1);
        for (std::size_t t = 0; t < warm; ++t)
            write_greedy(mem, rng, random_unit(rng, d), Vector{double(t)}, 0.3);
        for (int q = 0; q < 20 && total < 1000; ++q, ++total) {
            const Vector h = gaussian(rng, d);
            std::size_t best = 0;
            double best_score = -INFINITY;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k < d; ++k) s += h[k] * mem.key(i)[k];
                if (s > best_score) {
                    best_score = s;
                    best = i;
                }
            }
            const auto r = read(mem, h);
            agree += r.index == best && r.value[0] == mem.value(best)[0];
        }
    }
    return {agree == total, fmt("%zu / %zu queries match exhaustive argmax (need 100%%)", agree, total)};
}

// 4 ------------------------------------------------------------------------

Verdict gmm_statistics() {
    const MixtureModel mix{{{1.0, -0.5, 0.0}, {0.0, 2.0, 0.3}, {-1.5, 0.0, 0.7}},
                           {{0.04, 0.25, 0.01}, {0.5, 0.1, 0.2}, {0.09, 0.3, 1.0}},
                           {0.2, 0.5, 0.3}};
    const std::size_t n = 100000, d = 3;
    Rng rng(404);
    Vector sum(d, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const auto x = gmm_sample(rng, mix);
        for (std::size_t k = 0; k < d; ++k) sum[k] += x[k];
    }
    double worst_z = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double mean = 0.0, second = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            mean += mix.weights[j] * mix.means[j][k];
            second += mix.weights[j] * (mix.variances[j][k] + mix.means[j][k] * mix.means[j][k]);
        }
        const double se = std::sqrt((second - mean * mean) / static_cast<double>(n));
        worst_z = std::max(worst_z, std::abs(sum[k] / static_cast<double>(n) - mean) / se);
    }

    MixtureModel flat = mix;
    for (auto& s : flat.variances) std::fill(s.begin(), s.end(), 0.0);
    std::size_t exact = 0;
    for (int t = 0; t < 10000; ++t) {
        const auto x = gmm_sample(rng, flat);
        exact += std::find(flat.means.begin(), flat.means.end(), x) != flat.means.end();
    }
    return {worst_z < 3.0 && exact == 10000,
            fmt("max |mean error| = %.2f SE over %zu dims (need < 3); zero-variance draws exact %zu/10000",
                worst_z, d, exact)};
}

// 5 ------------------------------------------------------------------------

Verdict branch_frequency() {
    Rng rng(505);
    auto mem = init_memory(rng, 64, 16, 1);
    while (!mem.full()) write_memory_dropout(mem, rng, random_unit(rng, 16), Vector{0}, 0.1, 8);
    std::size_t oldest = 0;
    for (int t = 0; t < 10000; ++t)
        oldest += write_memory_dropout(mem, rng, random_unit(rng, 16), Vector{0}, 0.1, 8).branch ==
                  WriteBranch::OverwriteOldest;
    return {oldest >= 900 && oldest <= 1100,
            fmt("OverwriteOldest fired %zu times in 10000 writes at eps = 0.1 (need [900, 1100])", oldest)};
}

// 6 ------------------------------------------------------------------------

Verdict correlation_ordering() {
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentConfig base;  // pinned defaults

    // Random-init baseline: mean aggregate over fresh memories of the same shape.
    Rng rng(606);
    double baseline = 0.0;
    for (int i = 0; i < 20; ++i)
        baseline += aggregated_correlation(init_memory(rng, base.memory_slots, base.stream.dim, 1)) / 20;

    int md_lower = 0, start_ok = 0, rises = 0;
    std::string finals;
    for (std::uint64_t s = 0; s < 10; ++s) {
        ExperimentConfig c = base;
        c.stream.seed = base.stream.seed + s;
        c.policy = Policy::Greedy;
        const auto g = run_experiment(c);
        c.policy = Policy::MemoryDropout;
        const auto m = run_experiment(c);
        md_lower += m.back().aggregated_correlation < g.back().aggregated_correlation;
        for (const auto* r : {&g, &m}) {
            start_ok += std::abs(r->front().aggregated_correlation - baseline) <= 0.02;
            rises += r->back().aggregated_correlation > r->front().aggregated_correlation;
        }
        finals += fmt(" %.3f/%.3f", g.back().aggregated_correlation, m.back().aggregated_correlation);
    }
    const double secs = seconds_since(t0);
    return {md_lower >= 9 && start_ok == 20 && rises == 20 && secs < 120.0,
            fmt("MD below greedy on %d/10 seeds (need >= 9); starts within 0.02 of baseline %.4f: %d/20; "
                "curves rising: %d/20; %.1f s (bound 120 s); final greedy/MD:",
                md_lower, baseline, start_ok, rises, secs) +
                finals};
}

// 7 ------------------------------------------------------------------------

Verdict memory_size_trend() {
    const std::size_t sizes[] = {16, 32, 64, 128};
    const auto emb = EmbeddingProvider::hashed(64, 7);
    std::vector<DuplicateKb> kbs;
    for (std::uint64_t s = 0; s < 10; ++s) kbs.push_back(duplicate_heavy_kb(emb, 64, 4, 0.1, 1000 + s));

    double mean[2][4] = {};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::uint64_t s = 0; s < 10; ++s)
            for (int p = 0; p < 2; ++p) {
                const PolicyConfig policy{p ? Policy::MemoryDropout : Policy::Greedy, sizes[i], 8, 0.1, 2000 + s};
                mean[p][i] += duplicate_kb_eval(kbs[s], policy, 0.1, 500).f1 / 10;
            }

    int inversions[2] = {0, 0}, md_ahead = 0;
    for (int p = 0; p < 2; ++p)
        for (std::size_t i = 0; i + 1 < 4; ++i) inversions[p] += mean[p][i + 1] < mean[p][i];
    for (std::size_t i = 0; i < 4; ++i) md_ahead += mean[1][i] >= mean[0][i];

    std::string table;
    for (std::size_t i = 0; i < 4; ++i) table += fmt(" N=%zu %.3f/%.3f", sizes[i], mean[0][i], mean[1][i]);
    return {inversions[0] <= 1 && inversions[1] <= 1 && md_ahead == 4,
            fmt("inversions greedy %d, MD %d (need <= 1 each); MD >= greedy at %d/4 sizes (need 4); "
                "mean F1 greedy/MD:",
                inversions[0], inversions[1], md_ahead) +
                table};
}

// 8 ------------------------------------------------------------------------

Verdict triplet_expansion() {
    const KBRow dentist{{"event", "date", "time", "party"}, {"dentist", "the 19th", "5pm", "Mike"}};
    const std::vector<Triplet> table{
        {"dentist", "time", "5pm"},      {"the 19th", "event", "dentist"}, {"dentist", "party", "Mike"},
        {"the 19th", "party", "Mike"},   {"dentist", "date", "the 19th"},  {"the 19th", "time", "5pm"},
        {"Mike", "time", "5pm"},         {"5pm", "event", "dentist"},      {"Mike", "event", "dentist"},
        {"5pm", "date", "the 19th"},     {"Mike", "date", "the 19th"},     {"5pm", "party", "Mike"},
    };
    auto got = expand_row(dentist);
    auto want = table;
    auto order = [](const Triplet& a, const Triplet& b) {
        return std::tie(a.subject, a.relation, a.object) < std::tie(b.subject, b.relation, b.object);
    };
    std::sort(got.begin(), got.end(), order);
    std::sort(want.begin(), want.end(), order);
    const bool dentist_ok = got == want;

    std::istringstream nav(
        "Distance,Traffic Info,Category,POI,Address\n"
        "5 miles,no traffic,coffee,Coupa,394 Van Ness Ave\n"
        "5 miles,no traffic,shopping center,Midtown Shopping Center,338 Alester Ave\n"
        "5 miles,moderate traffic,hospital,Stanford Express Care,214 El Camino Real\n"
        "6 miles,moderate traffic,chinese restaurant,P.F. Changs,669 El Camino Real\n"
        "2 miles,no traffic,friends house,Toms house,580 Van Ness Ave\n"
        "2 miles,heavy traffic,chinese restaurant,Panda Express,3842 Arrowhead Way\n");
    const auto rows = read_kb_csv(nav);
    std::size_t twenty = 0;
    for (const auto& row : rows) twenty += expand_row(row).size() == 20;
    return {dentist_ok && twenty == rows.size(),
            fmt("dentist row: %zu triplets, %s the table; 5-column rows with 20 triplets: %zu/%zu",
                got.size(), dentist_ok ? "matching" : "NOT matching", twenty, rows.size())};
}

// 9 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict cli_determinism(const std::string& cli) {
    if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not found (pass --cli PATH)"};
    const fs::path dir = fs::temp_directory_path() / ("memdrop_accept_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto p = [&](const std::string& name) { return (dir / name).string(); };

    ExperimentConfig c;
    c.memory_slots = 32;
    c.stream.dim = 32;
    c.stream.steps = 500;
    {
        std::ofstream cfg(p("exp.cfg"));
        write_config(cfg, c);
        std::ofstream(p("kb.csv")) << "event,date,time,party\ndentist,the 19th,5pm,Mike\n"
                                      "\"dinner, late\",sunday,7pm,aunt\n";
    }

    // Each command runs twice with its outputs suffixed by the run number.
    const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
        {"run " + p("exp.cfg") + " --out " + p("run@.csv") + " --snapshot-out " + p("run@.snap"),
         {"run@.csv", "run@.snap"}},
        {"run " + p("exp.cfg") + " --seed 42", {}},
        {"sweep " + p("exp.cfg") + " --axis neighborhood --values 2,4 --out " + p("sweep@.csv"), {"sweep@.csv"}},
        {"sweep " + p("exp.cfg") + " --axis memory --values 16,24", {}},
        {"expand-kb " + p("kb.csv") + " --emb hashed --dim 16 --seed 3 --out " + p("kb@.txt"),
         {"kb@.txt", "kb@.txt.kv"}},
        {"snapshot init --slots 16 --dim 8 --seed 5 --out " + p("init@.snap"), {"init@.snap"}},
        {"snapshot init --slots 8 --dim 4", {}},
        {"correlate --full " + p("run1.snap"), {}},
        {"snapshot inspect " + p("run1.snap"), {}},
    };
    std::size_t identical = 0;
    std::string failed;
    for (const auto& [args, outputs] : commands) {
        std::string stdout_text[2];
        bool ok = true;
        for (int r = 1; r <= 2; ++r) {
            std::string a = args;
            for (std::size_t at; (at = a.find('@')) != std::string::npos;) a.replace(at, 1, std::to_string(r));
            const std::string out = p("stdout" + std::to_string(r));
            const int status = std::system(("'" + cli + "' " + a + " >'" + out + "' 2>/dev/null").c_str());
            ok = ok && WIFEXITED(status) && WEXITSTATUS(status) == 0;
            stdout_text[r - 1] = slurp(out);
        }
        ok = ok && stdout_text[0] == stdout_text[1];
        for (auto name : outputs) {
            std::string one = name, two = name;
            one.replace(one.find('@'), 1, "1");
            two.replace(two.find('@'), 1, "2");
            ok = ok && !slurp(p(one)).empty() && slurp(p(one)) == slurp(p(two));
        }
        identical += ok;
        if (!ok) failed += " [" + args.substr(0, args.find(' ')) + "]";
    }
    fs::remove_all(dir);
    return {identical == commands.size(),
            fmt("%zu/%zu invocations byte-identical across two runs", identical, commands.size()) + failed};
}

// 10 -----------------------------------------------------------------------

Verdict exact_retrieval() {
    const auto emb = EmbeddingProvider::hashed(64, 13);
    const KBRow dentist{{"event", "date", "time", "party"}, {"dentist", "the 19th", "5pm", "Mike"}};
    std::vector<std::vector<KeyValuePair>> sets(2);
    for (const auto& t : expand_row(dentist)) sets[0].push_back(triplet_to_kv(t, emb));
    sets[1] = duplicate_heavy_kb(emb, 64, 1, 0.0, 17).facts;

    std::size_t perfect = 0, runs = 0;
    double worst = 1.0;
    for (const auto& pairs : sets)
        for (std::size_t mult : {1, 2, 4})
            for (int p = 0; p < 2; ++p)
                for (std::uint64_t s = 0; s < 5; ++s) {
                    const PolicyConfig policy{p ? Policy::MemoryDropout : Policy::Greedy, pairs.size() * mult,
                                              8, 0.0, 300 + s};
                    const double f1 = kb_retrieval_eval(pairs, policy, 0.0, 500).f1;
                    perfect += f1 == 1.0;
                    worst = std::min(worst, f1);
                    ++runs;
                }
    return {perfect == runs,
            fmt("%zu/%zu loads with F1 = 1.0 (K = 12 and 64, N = K, 2K, 4K, both policies, 5 seeds); worst F1 %.3f",
                perfect, runs, worst)};
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    std::string cli;
    for (int i = 1; i < argc; ++i) {
        if (!std::strcmp(argv[i], "--only") && i + 1 < argc)
            only = std::atoi(argv[++i]);
        else if (!std::strcmp(argv[i], "--cli") && i + 1 < argc)
            cli = argv[++i];
        else {
            std::fprintf(stderr, "usage: %s [--only N] [--cli PATH]\n", argv[0]);
            return 2;
        }
    }

    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"unit-key invariant", unit_key_invariant},
        {"write bookkeeping oracle", algorithm_oracle},
        {"read oracle", read_oracle},
        {"mixture sampling statistics", gmm_statistics},
        {"branch frequency", branch_frequency},
        {"correlation ordering", correlation_ordering},
        {"memory-size trend", memory_size_trend},
        {"triplet expansion", triplet_expansion},
        {"CLI determinism", [&] { return cli_determinism(cli); }},
        {"exact retrieval", exact_retrieval},
    };
    if (only < 0 || only > static_cast<int>(criteria.size())) {
        std::fprintf(stderr, "no criterion %d\n", only);
        return 2;
    }

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (only && static_cast<int>(i + 1) != only) continue;
        const Verdict v = criteria[i].second();
        std::printf("[%s] %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
        std::fflush(stdout);
        all = all && v.pass;
    }
    return all ? 0 : 1;
}
