#include "memdrop/kb.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "memdrop/errors.hpp"
#include "memdrop/rng.hpp"

namespace memdrop {
namespace {

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!current.empty()) words.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

}  // namespace

void validate(const KBRow& row) {
    if (row.columns.size() != row.cells.size())
        throw UsageError("KB row has " + std::to_string(row.columns.size()) + " columns but " +
                         std::to_string(row.cells.size()) + " cells");
    if (row.columns.size() < 2) throw UsageError("KB row needs at least two columns");
    std::set<std::string_view> seen;
    for (const auto& c : row.columns)
        if (!seen.insert(c).second) throw UsageError("duplicate KB column name '" + c + "'");
}

std::string fold_case(std::string_view token) {
    std::string out(token);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

Vector hashed_embedding(std::string_view token, std::size_t d, std::uint64_t seed) {
    if (d == 0) throw UsageError("embedding dimension must be positive");
    Rng rng(splitmix64(fnv1a64(token) ^ splitmix64(seed)));
    Vector v(d);
    do {
        for (double& x : v) x = rng.normal();
    } while (norm(v) == 0.0);
    return normalized(v);
}

EmbeddingProvider EmbeddingProvider::hashed(std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw UsageError("embedding dimension must be positive");
    return EmbeddingProvider(dim, seed, nullptr, {});
}

EmbeddingProvider EmbeddingProvider::from_file(const std::filesystem::path& path,
                                               std::uint64_t fallback_seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open embedding file " + path.string());
    return from_stream(in, fallback_seed);
}

EmbeddingProvider EmbeddingProvider::from_stream(std::istream& in, std::uint64_t fallback_seed) {
    auto vocab = std::make_shared<Vocabulary>();
    std::vector<std::string> warnings;
    std::size_t dim = 0;
    std::string line;
    for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
        auto fields = split_words(line);
        if (fields.empty()) continue;
        const std::string where = "embedding file line " + std::to_string(line_no);
        if (fields.size() < 2) throw ParseError(where + ": expected a token followed by numbers");
        Vector v;
        v.reserve(fields.size() - 1);
        for (std::size_t k = 1; k < fields.size(); ++k) {
            char* end = nullptr;
            const double x = std::strtod(fields[k].c_str(), &end);
            if (end != fields[k].c_str() + fields[k].size() || !std::isfinite(x))
                throw ParseError(where + ": '" + fields[k] + "' is not a finite number");
            v.push_back(x);
        }
        if (dim == 0) {
            dim = v.size();
        } else if (v.size() != dim) {
            throw ParseError(where + ": has " + std::to_string(v.size()) +
                             " components, expected " + std::to_string(dim));
        }
        auto [it, fresh] = vocab->insert_or_assign(fields[0], std::move(v));
        if (!fresh)
            warnings.push_back(where + ": duplicate token '" + fields[0] + "', keeping this one");
    }
    if (dim == 0) throw ParseError("embedding file has no vectors");
    return EmbeddingProvider(dim, fallback_seed, std::move(vocab), std::move(warnings));
}

Vector EmbeddingProvider::embed_word(std::string_view word) const {
    if (vocab_) {
        if (auto it = vocab_->find(std::string(word)); it != vocab_->end()) return it->second;
        std::clog << "warning: '" << word << "' not in embedding file, using hashed fallback\n";
    }
    return hashed_embedding(word, dim_, seed_);
}

Vector EmbeddingProvider::embed(std::string_view token) const {
    const auto words = split_words(token);
    if (words.size() <= 1) return embed_word(words.empty() ? token : std::string_view(words[0]));
    if (vocab_) {
        if (auto it = vocab_->find(std::string(token)); it != vocab_->end()) return it->second;
    }
    Vector sum(dim_, 0.0);
    for (const auto& w : words) {
        const Vector e = embed_word(w);
        for (std::size_t k = 0; k < dim_; ++k) sum[k] += e[k];
    }
    if (norm(sum) == 0.0) return sum;
    return normalized(sum);
}

std::vector<Triplet> expand_row(const KBRow& row) {
    validate(row);
    const std::size_t c = row.cells.size();
    std::vector<Triplet> out;
    out.reserve(c * (c - 1));
    for (std::size_t a = 0; a < c; ++a)
        for (std::size_t b = 0; b < c; ++b)
            if (a != b) out.push_back({row.cells[a], row.columns[b], row.cells[b]});
    return out;
}

KeyValuePair triplet_to_kv(const Triplet& t, const EmbeddingProvider& emb) {
    const Vector s = emb.embed(fold_case(t.subject));
    const Vector r = emb.embed(t.relation);
    Vector key(s.size());
    for (std::size_t k = 0; k < key.size(); ++k) key[k] = s[k] + r[k];
    const double n = norm(key);
    if (!(n > 1e-12))
        throw UsageError("key for (" + t.subject + ", " + t.relation + ") has zero norm");
    for (double& x : key) x /= n;
    return {std::move(key), emb.embed(fold_case(t.object)), t};
}

namespace {

// Splits one CSV record, which may span several physical lines when a quoted
// field contains a newline. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_no) {
    fields.clear();
    std::string line;
    if (!std::getline(in, line)) return false;
    ++line_no;
    const std::size_t start_line = line_no;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0;; ++i) {
        if (i == line.size()) {
            if (!quoted) break;
            std::string next;
            if (!std::getline(in, next))
                throw ParseError("KB csv line " + std::to_string(start_line) + ": unterminated quote");
            ++line_no;
            field.push_back('\n');
            line = std::move(next);
            i = static_cast<std::size_t>(-1);
            continue;
        }
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return true;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

bool blank(const std::vector<std::string>& fields) {
    return fields.size() == 1 && trim(fields[0]).empty();
}

}  // namespace

std::vector<KBRow> read_kb_csv(std::istream& in) {
    std::vector<std::string> header;
    std::size_t line_no = 0;
    while (read_record(in, header, line_no) && blank(header)) {
    }
    if (header.empty() || blank(header)) throw ParseError("KB csv: missing header row");
    for (auto& h : header) h = trim(std::move(h));

    std::vector<KBRow> rows;
    std::vector<std::string> fields;
    while (read_record(in, fields, line_no)) {
        if (blank(fields)) continue;
        if (fields.size() != header.size())
            throw ParseError("KB csv line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        KBRow row{header, {}};
        row.cells.reserve(fields.size());
        for (auto& f : fields) row.cells.push_back(trim(std::move(f)));
        try {
            validate(row);
        } catch (const UsageError& e) {
            throw ParseError("KB csv line " + std::to_string(line_no) + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("KB csv: no data rows");
    return rows;
}

std::string csv_field(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace memdrop
