#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "memdrop/rng.hpp"
#include "memdrop/vec.hpp"

namespace memdrop {

/// Key-value memory M = (K, V, A, S).
///
/// Four parallel row-major arrays of N slots: unit keys (N x d), values
/// (N x d_v), ages and per-dimension key variances (N x d). Every key row has
/// unit norm after construction and after every write.
///
/// Slots fill in index order: while `filled() < n_slots()` a write stores
/// into slot `filled()`, and the replacement policies only run once the
/// memory is full. Unfilled slots hold placeholder unit keys and zero values.
///
/// Single writer: writes mutate in place and must be serialized by the
/// caller. Const operations may run concurrently with each other. Copying
/// makes a deep snapshot.
class MemoryModule {
public:
    using Age = std::uint64_t;

    MemoryModule(std::size_t n_slots, std::size_t key_dim, std::size_t value_dim);

    std::size_t n_slots() const noexcept { return n_slots_; }
    std::size_t key_dim() const noexcept { return key_dim_; }
    std::size_t value_dim() const noexcept { return value_dim_; }

    std::size_t filled() const noexcept { return filled_; }
    bool full() const noexcept { return filled_ == n_slots_; }
    void set_filled(std::size_t n);

private:
    static std::span<const double> row(const std::vector<double>& data, std::size_t i,
                                       std::size_t width) {
        return std::span(data).subspan(i * width, width);
    }
    static std::span<double> row(std::vector<double>& data, std::size_t i, std::size_t width) {
        return std::span(data).subspan(i * width, width);
    }

public:

    std::span<const double> key(std::size_t i) const { return row(keys_, i, key_dim_); }
    std::span<const double> value(std::size_t i) const { return row(values_, i, value_dim_); }
    std::span<const double> variance(std::size_t i) const { return row(variances_, i, key_dim_); }
    Age age(std::size_t i) const { return ages_.at(i); }

    std::span<const double> keys() const noexcept { return keys_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<const double> variances() const noexcept { return variances_; }
    std::span<const Age> ages() const noexcept { return ages_; }

    std::span<double> key(std::size_t i) { return row(keys_, i, key_dim_); }
    std::span<double> value(std::size_t i) { return row(values_, i, value_dim_); }
    std::span<double> variance(std::size_t i) { return row(variances_, i, key_dim_); }
    Age& age(std::size_t i) { return ages_.at(i); }

    /// Largest deviation of any key norm from 1.
    double max_key_norm_error() const;

    friend bool operator==(const MemoryModule&, const MemoryModule&) = default;

private:
    std::size_t n_slots_;
    std::size_t key_dim_;
    std::size_t value_dim_;
    std::size_t filled_ = 0;
    std::vector<double> keys_;
    std::vector<double> values_;
    std::vector<Age> ages_;
    std::vector<double> variances_;
};

/// Top-P slots by similarity, descending; ties go to the lower index.
struct Neighborhood {
    std::vector<std::size_t> indices;
    std::vector<double> similarities;

    std::size_t size() const noexcept { return indices.size(); }
};

/// Diagonal Gaussian mixture over a neighborhood: means are the neighbor
/// keys, variances their S rows, weights softmax(h . K').
struct MixtureModel {
    std::vector<Vector> means;
    std::vector<Vector> variances;
    std::vector<double> weights;
};

enum class WriteBranch {
    FillEmpty,        // memory not yet full; no policy involved
    OverwriteOldest,  // memory dropout, probability ε
    DropoutUpdate,    // memory dropout, GMM merge into the nearest slot
    OverwriteRandom,  // greedy baseline, probability ε
    MergeNearest,     // greedy baseline, merge into the nearest slot
};

const char* to_string(WriteBranch branch) noexcept;

struct WriteOutcome {
    WriteBranch branch;
    std::size_t slot;
    std::optional<Vector> sampled;               // DropoutUpdate only
    std::optional<Neighborhood> neighborhood;    // DropoutUpdate only

    bool overwrote() const noexcept {
        return branch == WriteBranch::OverwriteOldest || branch == WriteBranch::OverwriteRandom;
    }
};

struct ReadResult {
    std::size_t index;
    Vector value;
    std::vector<double> attention;
};

/// Empty memory with random placeholder unit keys (Gaussian draws,
/// normalized); zero values, ages and variances.
MemoryModule init_memory(Rng& rng, std::size_t n_slots, std::size_t key_dim,
                         std::size_t value_dim);

/// h . K[i] for every slot.
std::vector<double> similarities(const MemoryModule& mem, std::span<const double> h);

/// Content lookup: argmax_i h . K[i] (lowest index on ties) plus softmax attention.
ReadResult read(const MemoryModule& mem, std::span<const double> h);

/// (k + h) / ||k + h||, or h normalized when the sum (numerically) cancels.
Vector merge_key(std::span<const double> k, std::span<const double> h);

/// The min(P, N) slots most similar to h.
Neighborhood nearest_neighbors(const MemoryModule& mem, std::span<const double> h,
                               std::size_t p);

std::vector<double> mixing_coefficients(std::span<const double> h,
                                        std::span<const Vector> neighbor_keys);

/// j ~ π, then μ_j + ε ⊙ sqrt(s_j) with ε ~ N(0, I). Draws one uniform and
/// d normals.
Vector gmm_sample(Rng& rng, const MixtureModel& mix);

/// One memory-dropout write (overwrite-oldest with probability ε, else
/// GMM-sampled merge into the nearest key with neighborhood age penalty),
/// followed by global aging. On a memory that is not yet full the write
/// fills the next empty slot instead and draws nothing from `rng`.
WriteOutcome write_memory_dropout(MemoryModule& mem, Rng& rng, std::span<const double> h,
                                  std::span<const double> v, double epsilon, std::size_t p);

/// Baseline: overwrite a uniformly random slot with probability ε, else merge
/// h into the nearest key. Ages are kept the same way as memory dropout but
/// never consulted. Fills empty slots first, like write_memory_dropout.
WriteOutcome write_greedy(MemoryModule& mem, Rng& rng, std::span<const double> h,
                          std::span<const double> v, double epsilon);

/// [h ; v]
Vector augment(std::span<const double> h, std::span<const double> v);

/// Text snapshot: header, (N, d, d_v, filled), then K, V, A, S row-major at
/// 17 significant digits so a round trip is lossless.
void save_snapshot(std::ostream& out, const MemoryModule& mem);
MemoryModule load_snapshot(std::istream& in);

}  // namespace memdrop
