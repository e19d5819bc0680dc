#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memdrop/vec.hpp"

namespace memdrop {

/// One row of a tabular KB: column names and the matching cells.
struct KBRow {
    std::vector<std::string> columns;
    std::vector<std::string> cells;
};

/// Throws UsageError unless columns and cells have equal length >= 2 and
/// the column names are distinct.
void validate(const KBRow& row);

struct Triplet {
    std::string subject;
    std::string relation;
    std::string object;

    friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct KeyValuePair {
    Vector key;  // unit norm
    Vector value;
    Triplet provenance;
};

/// Unit vector drawn from a generator seeded by FNV-1a(token) mixed with
/// `seed`. Portable across platforms for a given (token, d, seed).
Vector hashed_embedding(std::string_view token, std::size_t d, std::uint64_t seed);

/// Token -> vector map, either purely hashed or backed by a GloVe-style text
/// file with hashed fallback for unknown words. Immutable once built and
/// cheap to copy.
class EmbeddingProvider {
public:
    static EmbeddingProvider hashed(std::size_t dim, std::uint64_t seed);

    /// Whitespace-separated `token x1 ... xd` lines, no header. Duplicate
    /// tokens keep the last occurrence and add a warning.
    static EmbeddingProvider from_file(const std::filesystem::path& path,
                                       std::uint64_t fallback_seed = 0);
    static EmbeddingProvider from_stream(std::istream& in, std::uint64_t fallback_seed = 0);

    std::size_t dimension() const noexcept { return dim_; }
    bool file_backed() const noexcept { return vocab_ != nullptr; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<std::string>& load_warnings() const noexcept { return warnings_; }

    /// A single word embeds directly. A multi-word phrase uses its own entry
    /// when the file has one, otherwise the normalized sum of its words.
    Vector embed(std::string_view token) const;

private:
    using Vocabulary = std::unordered_map<std::string, Vector>;

    EmbeddingProvider(std::size_t dim, std::uint64_t seed, std::shared_ptr<const Vocabulary> vocab,
                      std::vector<std::string> warnings)
        : dim_(dim), seed_(seed), vocab_(std::move(vocab)), warnings_(std::move(warnings)) {}

    Vector embed_word(std::string_view word) const;

    std::size_t dim_;
    std::uint64_t seed_;
    std::shared_ptr<const Vocabulary> vocab_;
    std::vector<std::string> warnings_;
};

/// Every ordered pair of distinct cell positions (a, b) becomes
/// (cells[a], columns[b], cells[b]), row-major in (a, b): c(c-1) triplets.
std::vector<Triplet> expand_row(const KBRow& row);

/// key = normalize(φ(subject) + φ(relation)), value = φ(object). Subject and
/// object are ASCII case-folded first; the relation is used verbatim.
/// Throws UsageError if the key sum has zero norm.
KeyValuePair triplet_to_kv(const Triplet& t, const EmbeddingProvider& emb);

/// CSV with a header row of column names, RFC 4180 quoting. Throws
/// ParseError (with line number) on ragged rows or an empty data section.
std::vector<KBRow> read_kb_csv(std::istream& in);

/// Quote a CSV field if it contains a comma, quote or newline.
std::string csv_field(std::string_view field);

std::string fold_case(std::string_view token);

}  // namespace memdrop
