#include "memdrop/memory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "memdrop/errors.hpp"
#include "memdrop/kernels.hpp"

namespace memdrop {
namespace {

constexpr double kDegenerateNorm = 1e-8;

void check_query(const MemoryModule& mem, std::span<const double> h) {
    if (h.size() != mem.key_dim())
        throw UsageError("query has dimension " + std::to_string(h.size()) + ", memory keys have " +
                         std::to_string(mem.key_dim()));
    if (!all_finite(h)) throw UsageError("query has non-finite entries");
}

void check_write(const MemoryModule& mem, std::span<const double> h, std::span<const double> v,
                 double epsilon) {
    check_query(mem, h);
    if (norm(h) < kDegenerateNorm) throw UsageError("cannot write a zero vector");
    if (v.size() != mem.value_dim())
        throw UsageError("value has dimension " + std::to_string(v.size()) + ", memory values have " +
                         std::to_string(mem.value_dim()));
    if (!all_finite(v)) throw UsageError("value has non-finite entries");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw UsageError("epsilon must be a probability in [0, 1], got " + std::to_string(epsilon));
}

std::size_t argmax(std::span<const double> xs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] > xs[best]) best = i;
    return best;
}

std::size_t oldest_slot(const MemoryModule& mem) {
    const auto ages = mem.ages();
    return static_cast<std::size_t>(std::max_element(ages.begin(), ages.end()) - ages.begin());
}

void assign(std::span<double> dst, std::span<const double> src) {
    std::copy(src.begin(), src.end(), dst.begin());
}

void overwrite_slot(MemoryModule& mem, std::size_t i, std::span<const double> h,
                    std::span<const double> v) {
    assign(mem.key(i), normalized(h));
    assign(mem.value(i), v);
    std::fill(mem.variance(i).begin(), mem.variance(i).end(), 0.0);
    mem.age(i) = 0;
}

void age_all(MemoryModule& mem) {
    for (std::size_t j = 0; j < mem.n_slots(); ++j) ++mem.age(j);
}

WriteOutcome fill_next(MemoryModule& mem, std::span<const double> h, std::span<const double> v) {
    const std::size_t i = mem.filled();
    overwrite_slot(mem, i, h, v);
    mem.set_filled(i + 1);
    age_all(mem);
    return {WriteBranch::FillEmpty, i, std::nullopt, std::nullopt};
}

}  // namespace

MemoryModule::MemoryModule(std::size_t n_slots, std::size_t key_dim, std::size_t value_dim)
    : n_slots_(n_slots),
      key_dim_(key_dim),
      value_dim_(value_dim),
      keys_(n_slots * key_dim, 0.0),
      values_(n_slots * value_dim, 0.0),
      ages_(n_slots, 0),
      variances_(n_slots * key_dim, 0.0) {
    if (n_slots == 0) throw UsageError("memory needs at least one slot");
    if (key_dim == 0) throw UsageError("key dimension must be positive");
    // A fresh module starts on the first basis vector so the unit-key
    // invariant holds even before init_memory fills it.
    for (std::size_t i = 0; i < n_slots; ++i) keys_[i * key_dim] = 1.0;
}

void MemoryModule::set_filled(std::size_t n) {
    if (n > n_slots_) throw UsageError("filled count exceeds slot count");
    filled_ = n;
}

double MemoryModule::max_key_norm_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < n_slots_; ++i) worst = std::max(worst, std::abs(norm(key(i)) - 1.0));
    return worst;
}

const char* to_string(WriteBranch branch) noexcept {
    switch (branch) {
        case WriteBranch::FillEmpty: return "fill_empty";
        case WriteBranch::OverwriteOldest: return "overwrite_oldest";
        case WriteBranch::DropoutUpdate: return "dropout_update";
        case WriteBranch::OverwriteRandom: return "overwrite_random";
        case WriteBranch::MergeNearest: return "merge_nearest";
    }
    return "unknown";
}

MemoryModule init_memory(Rng& rng, std::size_t n_slots, std::size_t key_dim,
                         std::size_t value_dim) {
    MemoryModule mem(n_slots, key_dim, value_dim);
    Vector draw(key_dim);
    for (std::size_t i = 0; i < n_slots; ++i) {
        do {
            for (double& x : draw) x = rng.normal();
        } while (norm(draw) < kDegenerateNorm);
        assign(mem.key(i), normalized(draw));
    }
    return mem;
}

std::vector<double> similarities(const MemoryModule& mem, std::span<const double> h) {
    check_query(mem, h);
    std::vector<double> sims(mem.n_slots());
    kernels::dot_scan(mem.keys(), mem.key_dim(), h, sims);
    return sims;
}

ReadResult read(const MemoryModule& mem, std::span<const double> h) {
    auto sims = similarities(mem, h);
    const std::size_t i = argmax(sims);
    const auto v = mem.value(i);
    return {i, Vector(v.begin(), v.end()), softmax(sims)};
}

Vector merge_key(std::span<const double> k, std::span<const double> h) {
    if (k.size() != h.size()) throw UsageError("merge_key: dimension mismatch");
    Vector sum(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) sum[i] = k[i] + h[i];
    if (norm(sum) >= kDegenerateNorm) return normalized(sum);
    if (norm(h) >= kDegenerateNorm) return normalized(h);
    return Vector(k.begin(), k.end());
}

namespace {

Neighborhood top_p(std::span<const double> sims, std::size_t p) {
    if (p == 0) throw UsageError("neighborhood size must be at least 1");
    p = std::min(p, sims.size());
    std::vector<std::size_t> order(sims.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(p), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
                      });
    order.resize(p);
    Neighborhood out{std::move(order), {}};
    out.similarities.reserve(p);
    for (std::size_t i : out.indices) out.similarities.push_back(sims[i]);
    return out;
}

}  // namespace

Neighborhood nearest_neighbors(const MemoryModule& mem, std::span<const double> h,
                               std::size_t p) {
    return top_p(similarities(mem, h), p);
}

std::vector<double> mixing_coefficients(std::span<const double> h,
                                        std::span<const Vector> neighbor_keys) {
    if (neighbor_keys.empty()) throw UsageError("mixture needs at least one component");
    std::vector<double> logits;
    logits.reserve(neighbor_keys.size());
    for (const auto& k : neighbor_keys) {
        if (k.size() != h.size()) throw UsageError("mixing_coefficients: dimension mismatch");
        logits.push_back(dot(h, k));
    }
    return softmax(logits);
}

Vector gmm_sample(Rng& rng, const MixtureModel& mix) {
    const auto& w = mix.weights;
    // Categorical draw over π; falls through to the last component if
    // rounding leaves the cumulative sum just below u.
    const double u = rng.uniform();
    std::size_t j = w.size() - 1;
    double cumulative = 0.0;
    for (std::size_t p = 0; p < w.size(); ++p) {
        cumulative += w[p];
        if (u < cumulative) {
            j = p;
            break;
        }
    }
    Vector out = mix.means[j];
    const auto& s = mix.variances[j];
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double e = rng.normal();
        out[k] += e * std::sqrt(s[k]);
    }
    return out;
}

WriteOutcome write_memory_dropout(MemoryModule& mem, Rng& rng, std::span<const double> h,
                                  std::span<const double> v, double epsilon, std::size_t p) {
    check_write(mem, h, v, epsilon);
    if (p == 0) throw UsageError("neighborhood size must be at least 1");
    if (!mem.full()) return fill_next(mem, h, v);

    if (rng.uniform() < epsilon) {
        const std::size_t i = oldest_slot(mem);
        overwrite_slot(mem, i, h, v);
        age_all(mem);
        return {WriteBranch::OverwriteOldest, i, std::nullopt, std::nullopt};
    }

    Neighborhood knn = nearest_neighbors(mem, h, p);
    MixtureModel mix;
    for (std::size_t n : knn.indices) {
        mix.means.emplace_back(mem.key(n).begin(), mem.key(n).end());
        mix.variances.emplace_back(mem.variance(n).begin(), mem.variance(n).end());
    }
    mix.weights = mixing_coefficients(h, mix.means);
    Vector sampled = gmm_sample(rng, mix);

    const std::size_t i = knn.indices.front();
    assign(mem.key(i), merge_key(sampled, h));

    // Penalize the whole neighborhood with the pre-assignment maximum age.
    const auto ages = mem.ages();
    const MemoryModule::Age oldest = *std::max_element(ages.begin(), ages.end());
    for (std::size_t n : knn.indices) mem.age(n) = oldest;

    auto s = mem.variance(i);
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double diff = h[k] - sampled[k];
        s[k] = diff * diff;
    }
    mem.age(i) = 0;
    assign(mem.value(i), v);
    age_all(mem);
    return {WriteBranch::DropoutUpdate, i, std::move(sampled), std::move(knn)};
}

WriteOutcome write_greedy(MemoryModule& mem, Rng& rng, std::span<const double> h,
                          std::span<const double> v, double epsilon) {
    check_write(mem, h, v, epsilon);
    if (!mem.full()) return fill_next(mem, h, v);

    if (rng.uniform() < epsilon) {
        const std::size_t i = rng.index(mem.n_slots());
        overwrite_slot(mem, i, h, v);
        age_all(mem);
        return {WriteBranch::OverwriteRandom, i, std::nullopt, std::nullopt};
    }

    const std::size_t i = argmax(similarities(mem, h));
    assign(mem.key(i), merge_key(mem.key(i), h));
    assign(mem.value(i), v);
    mem.age(i) = 0;
    age_all(mem);
    return {WriteBranch::MergeNearest, i, std::nullopt, std::nullopt};
}

Vector augment(std::span<const double> h, std::span<const double> v) {
    Vector out(h.begin(), h.end());
    out.insert(out.end(), v.begin(), v.end());
    return out;
}

}  // namespace memdrop
