#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace memdrop {

class MemoryModule;

/// Row-major n x n Pearson matrix over the rows of a row-major key matrix,
/// each row's `dim` entries taken as paired samples. Constant rows
/// correlate 0 with everything else (a warning goes to stderr).
/// Requires dim >= 2 and at least two rows.
std::vector<double> pearson_matrix(std::span<const double> keys, std::size_t dim);

/// Mean of |r_ij| over all i != j; in [0, 1].
double aggregated_correlation(std::span<const double> keys, std::size_t dim);
double aggregated_correlation(const MemoryModule& mem);

struct F1Report {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
};

using EntitySet = std::set<std::string>;

/// Precision, recall and F1 from raw counts; every 0/0 is 0.
F1Report f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

F1Report entity_f1(const EntitySet& predicted, const EntitySet& gold);

/// Micro-averaged: counts are summed over all cases first.
F1Report corpus_entity_f1(std::span<const std::pair<EntitySet, EntitySet>> cases);

}  // namespace memdrop
