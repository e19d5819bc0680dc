#include "memdrop/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "memdrop/errors.hpp"

namespace memdrop {
namespace {

// Sub-stream tags for derive_seed.
enum : std::uint64_t {
    kCentroidStream = 1,
    kStepStream = 2,
    kMemoryInit = 3,
    kWriteStream = 4,
    kQueryStream = 5,
    kKbRows = 6,
    kKbNoise = 7,
};

Vector noisy_unit(std::span<const double> base, double sigma, Rng& rng) {
    Vector out(base.begin(), base.end());
    for (double& x : out) x += sigma * rng.normal();
    // Practically unreachable, but a zero draw would not normalize.
    if (norm(out) == 0.0) return Vector(base.begin(), base.end());
    return normalized(out);
}

TrajectoryRecord snapshot_record(const MemoryModule& mem, std::size_t step,
                                 std::size_t overwrites) {
    TrajectoryRecord rec;
    rec.step = step;
    rec.aggregated_correlation = aggregated_correlation(mem);
    rec.overwrite_count = overwrites;
    const auto ages = mem.ages();
    rec.mean_age = std::accumulate(ages.begin(), ages.end(), 0.0) / static_cast<double>(ages.size());
    return rec;
}

}  // namespace

const char* to_string(Policy policy) noexcept {
    return policy == Policy::Greedy ? "greedy" : "memory_dropout";
}

std::optional<Policy> parse_policy(std::string_view name) {
    if (name == "greedy") return Policy::Greedy;
    if (name == "memory_dropout") return Policy::MemoryDropout;
    return std::nullopt;
}

std::optional<SweepAxis> parse_axis(std::string_view name) {
    if (name == "memory") return SweepAxis::MemorySlots;
    if (name == "neighborhood") return SweepAxis::Neighborhood;
    return std::nullopt;
}

void validate(const ExperimentConfig& c) {
    // Pearson over keys needs two rows.
    if (c.memory_slots < 2) throw ConfigError("memory_slots", "memory_slots must be >= 2");
    if (c.neighborhood < 1) throw ConfigError("neighborhood", "neighborhood must be >= 1");
    if (!(c.epsilon >= 0.0 && c.epsilon <= 1.0))
        throw ConfigError("epsilon", "epsilon must lie in [0, 1]");
    if (c.stream.n_clusters < 1) throw ConfigError("n_clusters", "n_clusters must be >= 1");
    if (c.stream.dim < 2) throw ConfigError("dim", "dim must be >= 2");
    if (!(c.stream.noise_sigma >= 0.0) || !std::isfinite(c.stream.noise_sigma))
        throw ConfigError("noise_sigma", "noise_sigma must be a finite value >= 0");
    if (c.stream.steps < 1) throw ConfigError("steps", "steps must be >= 1");
    if (c.record_every < 1) throw ConfigError("record_every", "record_every must be >= 1");
    if (c.eval_queries < 1) throw ConfigError("eval_queries", "eval_queries must be >= 1");
}

PolicyConfig policy_of(const ExperimentConfig& c) {
    return {c.policy, c.memory_slots, c.neighborhood, c.epsilon, c.stream.seed};
}

WriteOutcome write(MemoryModule& mem, Rng& rng, const PolicyConfig& policy,
                   std::span<const double> h, std::span<const double> v) {
    if (policy.policy == Policy::Greedy) return write_greedy(mem, rng, h, v, policy.epsilon);
    return write_memory_dropout(mem, rng, h, v, policy.epsilon, policy.neighborhood);
}

ClusteredStream::ClusteredStream(const StreamConfig& config) : config_(config) {
    Rng rng(derive_seed(config.seed, kCentroidStream));
    Vector draw(config.dim);
    for (std::size_t c = 0; c < config.n_clusters; ++c) {
        do {
            for (double& x : draw) x = rng.normal();
        } while (norm(draw) == 0.0);
        centroids_.push_back(normalized(draw));
    }
}

Vector ClusteredStream::one_hot(std::size_t label) const {
    Vector v(config_.n_clusters, 0.0);
    v.at(label) = 1.0;
    return v;
}

StreamItem ClusteredStream::draw(Rng& rng) const {
    const std::size_t label = rng.index(centroids_.size());
    Vector h = config_.noise_sigma == 0.0 ? centroids_[label]
                                          : noisy_unit(centroids_[label], config_.noise_sigma, rng);
    return {std::move(h), label, one_hot(label)};
}

std::vector<StreamItem> synth_stream(const StreamConfig& config) {
    ClusteredStream stream(config);
    Rng rng(derive_seed(config.seed, kStepStream));
    std::vector<StreamItem> out;
    out.reserve(config.steps);
    for (std::size_t t = 0; t < config.steps; ++t) out.push_back(stream.draw(rng));
    return out;
}

std::vector<TrajectoryRecord> run_experiment(const ExperimentConfig& config,
                                             MemoryModule* final_memory) {
    validate(config);
    const auto& sc = config.stream;
    const PolicyConfig policy = policy_of(config);

    Rng init_rng(derive_seed(sc.seed, kMemoryInit));
    MemoryModule mem = init_memory(init_rng, config.memory_slots, sc.dim, sc.n_clusters);

    ClusteredStream stream(sc);
    Rng step_rng(derive_seed(sc.seed, kStepStream));
    Rng write_rng(derive_seed(sc.seed, kWriteStream));

    std::vector<TrajectoryRecord> records{snapshot_record(mem, 0, 0)};
    std::size_t overwrites = 0;
    for (std::size_t t = 1; t <= sc.steps; ++t) {
        const StreamItem item = stream.draw(step_rng);
        if (write(mem, write_rng, policy, item.h, item.value).overwrote()) ++overwrites;
        if (t % config.record_every == 0 || t == sc.steps)
            records.push_back(snapshot_record(mem, t, overwrites));
    }

    Rng query_rng(derive_seed(sc.seed, kQueryStream));
    std::vector<LabeledVector> queries;
    queries.reserve(config.eval_queries);
    for (std::size_t q = 0; q < config.eval_queries; ++q) {
        auto item = stream.draw(query_rng);
        queries.push_back({std::to_string(item.label), std::move(item.h)});
    }
    std::vector<LabeledVector> catalog;
    for (std::size_t c = 0; c < sc.n_clusters; ++c)
        catalog.push_back({std::to_string(c), stream.one_hot(c)});
    records.back().retrieval_f1 = evaluate_retrieval(mem, queries, catalog).f1;
    if (final_memory) *final_memory = std::move(mem);
    return records;
}

F1Report evaluate_retrieval(const MemoryModule& mem, std::span<const LabeledVector> queries,
                            std::span<const LabeledVector> catalog) {
    static const std::string kNoEntity = "<none>";
    std::size_t hits = 0;
    for (const auto& q : queries) {
        const ReadResult r = read(mem, q.vector);
        const std::string* predicted = &kNoEntity;
        // Unwritten slots hold the zero vector, which names no entity.
        if (norm(r.value) > 1e-12) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& entry : catalog) {
                double dist = 0.0;
                for (std::size_t k = 0; k < entry.vector.size(); ++k) {
                    const double diff = entry.vector[k] - r.value[k];
                    dist += diff * diff;
                }
                if (dist < best) {
                    best = dist;
                    predicted = &entry.label;
                }
            }
        }
        if (*predicted == q.label) ++hits;
    }
    const std::size_t misses = queries.size() - hits;
    return f1_from_counts(hits, misses, misses);
}

namespace {

std::vector<LabeledVector> object_catalog(std::span<const KeyValuePair> pairs) {
    std::vector<LabeledVector> catalog;
    std::set<std::string> seen;
    for (const auto& p : pairs) {
        const std::string label = fold_case(p.provenance.object);
        if (seen.insert(label).second) catalog.push_back({label, p.value});
    }
    return catalog;
}

MemoryModule load_pairs(std::span<const KeyValuePair> pairs, const PolicyConfig& policy) {
    const std::size_t d = pairs.front().key.size();
    const std::size_t dv = pairs.front().value.size();
    Rng init_rng(derive_seed(policy.seed, kMemoryInit));
    MemoryModule mem = init_memory(init_rng, policy.memory_slots, d, dv);
    Rng write_rng(derive_seed(policy.seed, kWriteStream));
    for (const auto& p : pairs) write(mem, write_rng, policy, p.key, p.value);
    return mem;
}

std::vector<LabeledVector> noisy_queries(std::span<const KeyValuePair> facts, double query_noise,
                                         std::size_t n_queries, std::uint64_t seed) {
    Rng rng(derive_seed(seed, kQueryStream));
    std::vector<LabeledVector> queries;
    queries.reserve(n_queries);
    for (std::size_t q = 0; q < n_queries; ++q) {
        const auto& fact = facts[rng.index(facts.size())];
        Vector h = query_noise == 0.0 ? fact.key : noisy_unit(fact.key, query_noise, rng);
        queries.push_back({fold_case(fact.provenance.object), std::move(h)});
    }
    return queries;
}

}  // namespace

F1Report kb_retrieval_eval(std::span<const KeyValuePair> pairs, const PolicyConfig& policy,
                           double query_noise, std::size_t n_queries) {
    if (pairs.empty()) throw UsageError("kb_retrieval_eval needs at least one pair");
    const MemoryModule mem = load_pairs(pairs, policy);
    const auto queries = noisy_queries(pairs, query_noise, n_queries, policy.seed);
    return evaluate_retrieval(mem, queries, object_catalog(pairs));
}

DuplicateKb duplicate_heavy_kb(const EmbeddingProvider& emb, std::size_t n_facts,
                               std::size_t copies, double duplicate_noise, std::uint64_t seed) {
    if (n_facts == 0 || copies == 0) throw UsageError("duplicate_heavy_kb needs facts and copies");
    static const std::vector<std::string> kColumns{"event", "date", "time", "party"};
    static const std::vector<std::vector<std::string>> kVocab{
        {"dentist", "tennis activity", "dinner", "optometrist appointment", "yoga activity",
         "doctor appointment", "swimming activity", "conference", "lab appointment", "meeting",
         "football activity", "taking medicine"},
        {"the 4th", "sunday", "thursday", "the 10th", "the 5th", "the 19th", "monday",
         "wednesday", "the 1st", "friday", "the 8th", "saturday"},
        {"5pm", "7pm", "2pm", "11am", "3pm", "10am", "9am", "1pm", "6pm", "4pm", "8pm", "noon"},
        {"sister", "aunt", "Martha", "Tom", "Mike", "brother", "father", "boss", "Alex", "Jon",
         "management", "mother"}};

    Rng rng(derive_seed(seed, kKbRows));
    DuplicateKb kb;
    std::set<std::pair<std::string, std::string>> keys_seen;
    for (std::size_t attempts = 0; kb.facts.size() < n_facts; ++attempts) {
        if (attempts > 100000) throw UsageError("duplicate_heavy_kb: vocabulary too small");
        KBRow row{kColumns, {}};
        for (const auto& words : kVocab) row.cells.push_back(words[rng.index(words.size())]);
        for (const auto& t : expand_row(row)) {
            if (kb.facts.size() == n_facts) break;
            // One object per (subject, relation) so every key has one answer.
            if (!keys_seen.emplace(fold_case(t.subject), t.relation).second) continue;
            kb.facts.push_back(triplet_to_kv(t, emb));
        }
    }

    Rng noise(derive_seed(seed, kKbNoise));
    for (const auto& fact : kb.facts) {
        for (std::size_t c = 0; c < copies; ++c) {
            KeyValuePair w = fact;
            if (duplicate_noise > 0.0) w.key = noisy_unit(fact.key, duplicate_noise, noise);
            kb.writes.push_back(std::move(w));
        }
    }
    for (std::size_t i = kb.writes.size(); i > 1; --i) std::swap(kb.writes[i - 1], kb.writes[noise.index(i)]);
    return kb;
}

F1Report duplicate_kb_eval(const DuplicateKb& kb, const PolicyConfig& policy, double query_noise,
                           std::size_t n_queries) {
    const MemoryModule mem = load_pairs(kb.writes, policy);
    const auto queries = noisy_queries(kb.facts, query_noise, n_queries, policy.seed);
    return evaluate_retrieval(mem, queries, object_catalog(kb.facts));
}

std::vector<SummaryRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                              std::span<const std::size_t> values) {
    if (values.empty()) throw UsageError("sweep needs at least one value");
    constexpr Policy kPolicies[] = {Policy::Greedy, Policy::MemoryDropout};
    std::vector<SummaryRow> rows(values.size() * 2);
    for (std::size_t k = 0; k < values.size(); ++k) {
        for (std::size_t p = 0; p < 2; ++p) {
            ExperimentConfig c = base;
            c.policy = kPolicies[p];
            c.stream.seed = base.stream.seed + k;
            (axis == SweepAxis::MemorySlots ? c.memory_slots : c.neighborhood) = values[k];
            validate(c);
            rows[2 * k + p].config = c;
        }
    }
    const auto jobs = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t j = 0; j < jobs; ++j) rows[j].record = run_experiment(rows[j].config).back();
    return rows;
}

namespace {

std::string fixed6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

}  // namespace

void write_csv_header(std::ostream& out) {
    out << "step,policy,memory_slots,neighborhood,epsilon,seed,agg_correlation,overwrite_count,"
           "mean_age,retrieval_f1\n";
}

void write_csv_row(std::ostream& out, const ExperimentConfig& c, const TrajectoryRecord& r) {
    out << r.step << ',' << to_string(c.policy) << ',' << c.memory_slots << ',' << c.neighborhood
        << ',' << fixed6(c.epsilon) << ',' << c.stream.seed << ','
        << fixed6(r.aggregated_correlation) << ',' << r.overwrite_count << ','
        << fixed6(r.mean_age) << ',' << (r.retrieval_f1 ? fixed6(*r.retrieval_f1) : "") << '\n';
}

void write_trajectory_csv(std::ostream& out, const ExperimentConfig& config,
                          std::span<const TrajectoryRecord> records) {
    write_csv_header(out);
    for (const auto& r : records) write_csv_row(out, config, r);
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
    write_csv_header(out);
    for (const auto& row : rows) write_csv_row(out, row.config, row.record);
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError(key, "'" + key + "' must be a non-negative integer, got '" + text + "'");
    try {
        return std::stoull(text);
    } catch (const std::out_of_range&) {
        throw ConfigError(key, "'" + key + "' is out of range: " + text);
    }
}

double parse_real(const std::string& key, const std::string& text) {
    char* end = nullptr;
    const double x = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || !std::isfinite(x))
        throw ConfigError(key, "'" + key + "' must be a finite number, got '" + text + "'");
    return x;
}

constexpr const char* kConfigKeys[] = {"policy",       "memory_slots", "neighborhood",
                                       "epsilon",      "n_clusters",   "dim",
                                       "noise_sigma",  "steps",        "seed",
                                       "record_every", "eval_queries"};

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
    std::map<std::string, std::string> fields;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", "config line " + std::to_string(line_no) +
                                      ": expected 'key = value'");
        const std::string key = trim(std::string_view(content).substr(0, eq));
        const std::string value = trim(std::string_view(content).substr(eq + 1));
        if (std::find(std::begin(kConfigKeys), std::end(kConfigKeys), key) == std::end(kConfigKeys))
            throw ConfigError(key, "unknown config key '" + key + "'");
        if (!fields.emplace(key, value).second)
            throw ConfigError(key, "config key '" + key + "' given twice");
    }
    for (const char* key : kConfigKeys)
        if (!fields.count(key))
            throw ConfigError(key, std::string("missing required config key '") + key + "'");

    ExperimentConfig c;
    const auto policy = parse_policy(fields["policy"]);
    if (!policy)
        throw ConfigError("policy", "'policy' must be greedy or memory_dropout, got '" +
                                        fields["policy"] + "'");
    c.policy = *policy;
    c.memory_slots = parse_unsigned("memory_slots", fields["memory_slots"]);
    c.neighborhood = parse_unsigned("neighborhood", fields["neighborhood"]);
    c.epsilon = parse_real("epsilon", fields["epsilon"]);
    c.stream.n_clusters = parse_unsigned("n_clusters", fields["n_clusters"]);
    c.stream.dim = parse_unsigned("dim", fields["dim"]);
    c.stream.noise_sigma = parse_real("noise_sigma", fields["noise_sigma"]);
    c.stream.steps = parse_unsigned("steps", fields["steps"]);
    c.stream.seed = parse_unsigned("seed", fields["seed"]);
    c.record_every = parse_unsigned("record_every", fields["record_every"]);
    c.eval_queries = parse_unsigned("eval_queries", fields["eval_queries"]);
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
    out << "policy = " << to_string(c.policy) << '\n'
        << "memory_slots = " << c.memory_slots << '\n'
        << "neighborhood = " << c.neighborhood << '\n'
        << "epsilon = " << fixed6(c.epsilon) << '\n'
        << "n_clusters = " << c.stream.n_clusters << '\n'
        << "dim = " << c.stream.dim << '\n'
        << "noise_sigma = " << fixed6(c.stream.noise_sigma) << '\n'
        << "steps = " << c.stream.steps << '\n'
        << "seed = " << c.stream.seed << '\n'
        << "record_every = " << c.record_every << '\n'
        << "eval_queries = " << c.eval_queries << '\n';
}

}  // namespace memdrop
