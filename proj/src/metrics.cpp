#include "memdrop/metrics.hpp"

#include <cmath>
#include <iostream>

#include "memdrop/errors.hpp"
#include "memdrop/kernels.hpp"
#include "memdrop/memory.hpp"

namespace memdrop {

std::vector<double> pearson_matrix(std::span<const double> keys, std::size_t dim) {
    if (dim < 2) throw UsageError("Pearson correlation needs key dimension >= 2");
    if (keys.size() % dim != 0) throw UsageError("key matrix size is not a multiple of dim");
    const std::size_t n = keys.size() / dim;
    if (n < 2) throw UsageError("Pearson correlation needs at least two keys");
    std::vector<double> out(n * n);
    if (const auto constant = kernels::pearson(keys, dim, out); constant > 0)
        std::clog << "warning: " << constant << " constant key row(s); their correlations are 0\n";
    return out;
}

double aggregated_correlation(std::span<const double> keys, std::size_t dim) {
    const auto r = pearson_matrix(keys, dim);
    const std::size_t n = keys.size() / dim;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) total += std::abs(r[i * n + j]);
    return total / static_cast<double>(n * (n - 1));
}

double aggregated_correlation(const MemoryModule& mem) {
    return aggregated_correlation(mem.keys(), mem.key_dim());
}

F1Report f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    F1Report r;
    r.true_positive = tp;
    r.false_positive = fp;
    r.false_negative = fn;
    if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (r.precision + r.recall > 0.0)
        r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

F1Report entity_f1(const EntitySet& predicted, const EntitySet& gold) {
    std::size_t tp = 0;
    for (const auto& e : predicted) tp += gold.count(e);
    return f1_from_counts(tp, predicted.size() - tp, gold.size() - tp);
}

F1Report corpus_entity_f1(std::span<const std::pair<EntitySet, EntitySet>> cases) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [predicted, gold] : cases) {
        const auto r = entity_f1(predicted, gold);
        tp += r.true_positive;
        fp += r.false_positive;
        fn += r.false_negative;
    }
    return f1_from_counts(tp, fp, fn);
}

}  // namespace memdrop
