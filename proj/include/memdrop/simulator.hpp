#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memdrop/kb.hpp"
#include "memdrop/memory.hpp"
#include "memdrop/metrics.hpp"
#include "memdrop/rng.hpp"

namespace memdrop {

enum class Policy { Greedy, MemoryDropout };

const char* to_string(Policy policy) noexcept;
std::optional<Policy> parse_policy(std::string_view name);

/// Clustered latent stream standing in for redundant training activations.
struct StreamConfig {
    std::size_t n_clusters = 4;
    std::size_t dim = 64;
    double noise_sigma = 0.1;
    std::size_t steps = 2000;
    std::uint64_t seed = 1;
};

struct ExperimentConfig {
    Policy policy = Policy::MemoryDropout;
    std::size_t memory_slots = 64;
    std::size_t neighborhood = 8;
    double epsilon = 0.1;
    StreamConfig stream;
    std::size_t record_every = 100;
    std::size_t eval_queries = 500;
};

/// Throws ConfigError naming the first invalid field.
void validate(const ExperimentConfig& config);

/// Write-policy parameters, independent of where the written vectors come from.
struct PolicyConfig {
    Policy policy = Policy::MemoryDropout;
    std::size_t memory_slots = 64;
    std::size_t neighborhood = 8;
    double epsilon = 0.1;
    std::uint64_t seed = 1;
};

PolicyConfig policy_of(const ExperimentConfig& config);

/// Dispatch one write under `policy`.
WriteOutcome write(MemoryModule& mem, Rng& rng, const PolicyConfig& policy,
                   std::span<const double> h, std::span<const double> v);

struct StreamItem {
    Vector h;
    std::size_t label;
    Vector value;  // one-hot of the cluster label
};

/// Fixed seeded unit centroids; each draw picks a cluster uniformly and
/// emits normalize(centroid + N(0, σ² I)).
class ClusteredStream {
public:
    explicit ClusteredStream(const StreamConfig& config);

    const std::vector<Vector>& centroids() const noexcept { return centroids_; }
    StreamItem draw(Rng& rng) const;
    Vector one_hot(std::size_t label) const;

private:
    StreamConfig config_;
    std::vector<Vector> centroids_;
};

/// config.steps items from a ClusteredStream; pure function of config.
std::vector<StreamItem> synth_stream(const StreamConfig& config);

struct TrajectoryRecord {
    std::size_t step = 0;
    double aggregated_correlation = 0.0;
    std::size_t overwrite_count = 0;
    double mean_age = 0.0;
    std::optional<double> retrieval_f1;
};

/// Initial record at step 0, then every record_every writes, and always
/// after the last write. The last record carries retrieval F1 over
/// eval_queries held-out noisy stream draws read from the final memory.
/// If `final_memory` is given, the memory after the last write is stored there.
std::vector<TrajectoryRecord> run_experiment(const ExperimentConfig& config,
                                             MemoryModule* final_memory = nullptr);

/// A query is a success when the read value's nearest catalog entry carries
/// the gold label. One entity per query, so precision = recall = accuracy.
struct LabeledVector {
    std::string label;
    Vector vector;
};

F1Report evaluate_retrieval(const MemoryModule& mem, std::span<const LabeledVector> queries,
                            std::span<const LabeledVector> catalog);

/// Write `pairs` in order into a fresh memory under `policy`, then query
/// n_queries noisy copies (σ_q, renormalized) of randomly chosen pair keys.
F1Report kb_retrieval_eval(std::span<const KeyValuePair> pairs, const PolicyConfig& policy,
                           double query_noise, std::size_t n_queries);

/// Redundant KB write stream: `n_facts` distinct triplets, each written
/// `copies` times as normalize(key + N(0, σ² I)) in shuffled order. Facts are
/// expanded from synthetic calendar rows so that keys sharing a subject are
/// correlated.
struct DuplicateKb {
    std::vector<KeyValuePair> facts;   // distinct, exact keys
    std::vector<KeyValuePair> writes;  // noisy duplicated stream
};

DuplicateKb duplicate_heavy_kb(const EmbeddingProvider& emb, std::size_t n_facts,
                               std::size_t copies, double duplicate_noise, std::uint64_t seed);

/// Retrieval after writing `kb.writes`, queried with noisy fact keys.
F1Report duplicate_kb_eval(const DuplicateKb& kb, const PolicyConfig& policy, double query_noise,
                           std::size_t n_queries);

enum class SweepAxis { MemorySlots, Neighborhood };

std::optional<SweepAxis> parse_axis(std::string_view name);

struct SummaryRow {
    ExperimentConfig config;
    TrajectoryRecord record;
};

/// One final record per (value, policy), values in order, greedy before
/// memory dropout. Value k runs with seed base.seed + k for both policies.
/// Grid points run in parallel; row order does not depend on scheduling.
std::vector<SummaryRow> sweep(const ExperimentConfig& base, SweepAxis axis,
                              std::span<const std::size_t> values);

// CSV schema:
// step,policy,memory_slots,neighborhood,epsilon,seed,agg_correlation,overwrite_count,mean_age,retrieval_f1
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const ExperimentConfig& config, const TrajectoryRecord& rec);
void write_trajectory_csv(std::ostream& out, const ExperimentConfig& config,
                          std::span<const TrajectoryRecord> records);
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

/// Flat `key = value` text, `#` comments. Every field is required.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& config);

}  // namespace memdrop
