#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memdrop/errors.hpp"
#include "memdrop/kb.hpp"
#include "memdrop/memory.hpp"
#include "memdrop/metrics.hpp"
#include "memdrop/simulator.hpp"

using namespace memdrop;

namespace {

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2 };

std::string fmt(const char* spec, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

// Writes to a file, or to stdout when the path is empty.
template <class F>
void emit(const std::string& path, F&& body) {
    if (path.empty()) {
        body(std::cout);
        std::cout.flush();
        if (!std::cout) throw std::runtime_error("failed writing to stdout");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::vector<std::size_t> parse_values(const std::string& text) {
    std::vector<std::size_t> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t v = 0;
        const char* end = item.data() + item.size();
        auto [ptr, ec] = std::from_chars(item.data(), end, v);
        if (item.empty() || ec != std::errc() || ptr != end || v == 0)
            throw UsageError("--values: '" + item + "' is not a positive integer");
        values.push_back(v);
    }
    if (values.empty() || (!text.empty() && text.back() == ','))
        throw UsageError("--values: need a comma-separated list of positive integers");
    return values;
}

struct RunArgs {
    std::string config, out, snapshot_out;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_run(const RunArgs& a) {
    ExperimentConfig cfg = load_config(a.config);
    if (a.seed_set) cfg.stream.seed = a.seed;
    MemoryModule final_memory(1, 1, 0);
    const auto records = run_experiment(cfg, &final_memory);
    emit(a.out, [&](std::ostream& o) { write_trajectory_csv(o, cfg, records); });
    if (!a.snapshot_out.empty())
        emit(a.snapshot_out, [&](std::ostream& o) { save_snapshot(o, final_memory); });
    return kOk;
}

struct SweepArgs {
    std::string config, axis, values, out;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_sweep(const SweepArgs& a) {
    const auto axis = parse_axis(a.axis);
    if (!axis) throw UsageError("--axis must be 'memory' or 'neighborhood', got '" + a.axis + "'");
    const auto values = parse_values(a.values);
    ExperimentConfig cfg = load_config(a.config);
    if (a.seed_set) cfg.stream.seed = a.seed;
    const auto rows = sweep(cfg, *axis, values);
    emit(a.out, [&](std::ostream& o) { write_summary_csv(o, rows); });
    return kOk;
}

struct ExpandArgs {
    std::string csv, emb = "hashed", out;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
};

EmbeddingProvider make_embedding(const ExpandArgs& a) {
    if (a.emb == "hashed") {
        if (a.dim == 0) throw UsageError("--dim is required with --emb hashed");
        return EmbeddingProvider::hashed(a.dim, a.seed);
    }
    if (a.emb.rfind("file:", 0) == 0 && a.emb.size() > 5) {
        auto emb = EmbeddingProvider::from_file(a.emb.substr(5), a.seed);
        for (const auto& w : emb.load_warnings()) std::cerr << "warning: " << w << '\n';
        if (a.dim != 0 && a.dim != emb.dimension())
            throw UsageError("--dim " + std::to_string(a.dim) + " does not match embedding file dimension " +
                             std::to_string(emb.dimension()));
        return emb;
    }
    throw UsageError("--emb must be 'hashed' or 'file:<path>', got '" + a.emb + "'");
}

int cmd_expand_kb(const ExpandArgs& a) {
    std::ifstream in(a.csv, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + a.csv);
    const auto rows = read_kb_csv(in);
    const auto emb = make_embedding(a);

    std::vector<Triplet> triplets;
    for (const auto& row : rows)
        for (auto& t : expand_row(row)) triplets.push_back(std::move(t));
    std::vector<KeyValuePair> pairs;
    pairs.reserve(triplets.size());
    for (const auto& t : triplets) pairs.push_back(triplet_to_kv(t, emb));

    emit(a.out, [&](std::ostream& o) {
        for (const auto& t : triplets)
            o << csv_field(t.subject) << ',' << csv_field(t.relation) << ',' << csv_field(t.object) << '\n';
    });
    const std::string kv_path = a.out + ".kv";
    emit(kv_path, [&](std::ostream& o) {
        const std::size_t d = emb.dimension();
        o << "subject,relation,object";
        for (std::size_t k = 0; k < d; ++k) o << ",k" << k;
        for (std::size_t k = 0; k < d; ++k) o << ",v" << k;
        o << '\n';
        for (const auto& p : pairs) {
            o << csv_field(p.provenance.subject) << ',' << csv_field(p.provenance.relation) << ','
              << csv_field(p.provenance.object);
            for (double x : p.key) o << ',' << fmt("%.17g", x);
            for (double x : p.value) o << ',' << fmt("%.17g", x);
            o << '\n';
        }
    });
    std::cerr << rows.size() << " rows, " << triplets.size() << " triplets\n";
    return kOk;
}

MemoryModule read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_snapshot(in);
}

int cmd_correlate(const std::string& path, bool full) {
    const MemoryModule mem = read_snapshot(path);
    std::cout << fmt("%.6f", aggregated_correlation(mem)) << '\n';
    if (full) {
        const std::size_t n = mem.n_slots();
        const auto r = pearson_matrix(mem.keys(), mem.key_dim());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) std::cout << (j ? "," : "") << fmt("%.6f", r[i * n + j]);
            std::cout << '\n';
        }
    }
    return kOk;
}

struct SnapshotInitArgs {
    std::size_t slots = 64, dim = 64, value_dim = 4;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_snapshot_init(const SnapshotInitArgs& a) {
    if (a.slots == 0 || a.dim == 0) throw UsageError("--slots and --dim must be positive");
    Rng rng(a.seed);
    const auto mem = init_memory(rng, a.slots, a.dim, a.value_dim);
    emit(a.out, [&](std::ostream& o) { save_snapshot(o, mem); });
    return kOk;
}

int cmd_snapshot_inspect(const std::string& path) {
    const MemoryModule mem = read_snapshot(path);
    std::cout << "slot,written,age";
    for (std::size_t k = 0; k < mem.key_dim(); ++k) std::cout << ",s" << k;
    std::cout << '\n';
    for (std::size_t i = 0; i < mem.n_slots(); ++i) {
        std::cout << i << ',' << (i < mem.filled()) << ',' << mem.age(i);
        for (double s : mem.variance(i)) std::cout << ',' << fmt("%.6g", s);
        std::cout << '\n';
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memdrop: key-value memory write policies, KB encoding and redundancy metrics"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run one experiment and write its trajectory CSV");
    run->add_option("config", run_args.config, "config file")->required();
    run->add_option("--out", run_args.out, "output CSV (default stdout)");
    auto* run_seed = run->add_option("--seed", run_args.seed, "override the config seed");
    run->add_option("--snapshot-out", run_args.snapshot_out, "save the final memory here");

    SweepArgs sweep_args;
    auto* sw = app.add_subcommand("sweep", "sweep memory size or neighborhood for both policies");
    sw->add_option("config", sweep_args.config, "base config file")->required();
    sw->add_option("--axis", sweep_args.axis, "memory | neighborhood")->required();
    sw->add_option("--values", sweep_args.values, "comma-separated positive integers")->required();
    sw->add_option("--out", sweep_args.out, "output CSV (default stdout)");
    auto* sweep_seed = sw->add_option("--seed", sweep_args.seed, "override the config seed");

    ExpandArgs expand_args;
    auto* ex = app.add_subcommand("expand-kb", "expand KB rows into triplets and key-value pairs");
    ex->add_option("csv", expand_args.csv, "KB table with a header row")->required();
    ex->add_option("--emb", expand_args.emb, "hashed | file:<path>");
    ex->add_option("--dim", expand_args.dim, "embedding dimension");
    ex->add_option("--out", expand_args.out, "triplet file; pairs go to <out>.kv")->required();
    ex->add_option("--seed", expand_args.seed, "hashed embedding seed");

    std::string corr_path;
    bool corr_full = false;
    auto* corr = app.add_subcommand("correlate", "aggregated key correlation of a snapshot");
    corr->add_option("snapshot", corr_path, "snapshot file")->required();
    corr->add_flag("--full", corr_full, "also print the correlation matrix");

    auto* snap = app.add_subcommand("snapshot", "create or inspect memory snapshots");
    snap->require_subcommand(1);
    SnapshotInitArgs init_args;
    auto* snap_init = snap->add_subcommand("init", "write a fresh random memory");
    snap_init->add_option("--slots", init_args.slots, "number of slots");
    snap_init->add_option("--dim", init_args.dim, "key dimension");
    snap_init->add_option("--value-dim", init_args.value_dim, "value dimension");
    snap_init->add_option("--seed", init_args.seed, "seed");
    snap_init->add_option("--out", init_args.out, "output file (default stdout)");
    std::string inspect_path;
    auto* snap_inspect = snap->add_subcommand("inspect", "dump ages and variances as CSV");
    snap_inspect->add_option("snapshot", inspect_path, "snapshot file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    run_args.seed_set = run_seed->count() > 0;
    sweep_args.seed_set = sweep_seed->count() > 0;

    try {
        if (*run) return cmd_run(run_args);
        if (*sw) return cmd_sweep(sweep_args);
        if (*ex) return cmd_expand_kb(expand_args);
        if (*corr) return cmd_correlate(corr_path, corr_full);
        if (*snap_init) return cmd_snapshot_init(init_args);
        if (*snap_inspect) return cmd_snapshot_inspect(inspect_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error [" << e.key() << "]: " << e.what() << '\n';
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
