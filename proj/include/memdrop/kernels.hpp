#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version (used by the
// library) and a serial reference kept for tests and the benchmark. Every
// output element is computed by the same per-element code in both versions,
// so results are bit-identical regardless of thread count.

#include <cstddef>
#include <span>

namespace memdrop::kernels {

/// Below this many multiply-adds the OpenMP kernels run single-threaded.
inline constexpr std::size_t kParallelWork = 1u << 15;

/// out[i] = <rows[i], query> for a row-major n_rows x dim matrix.
void dot_scan(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out);

/// Pearson correlation between every pair of rows (each row's `dim` entries
/// are the paired samples). Rows with zero variance correlate 0 with every
/// other row. The diagonal is 1. Returns the number of constant rows.
std::size_t pearson(std::span<const double> rows, std::size_t dim, std::span<double> out);

namespace serial {

void dot_scan(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out);

std::size_t pearson(std::span<const double> rows, std::size_t dim, std::span<double> out);

}  // namespace serial

}  // namespace memdrop::kernels
