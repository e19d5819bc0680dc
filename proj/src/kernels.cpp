#include "memdrop/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "memdrop/vec.hpp"

namespace memdrop {

Vector softmax(std::span<const double> logits) {
    Vector out(logits.size());
    if (logits.empty()) return out;
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

namespace kernels {
namespace {

// Row i minus its mean, plus the centered norm. Shared by both pearson paths.
struct CenteredRows {
    std::vector<double> data;
    std::vector<double> norms;
};

void center_row(std::span<const double> rows, std::size_t dim, std::size_t i, CenteredRows& c) {
    const auto row = rows.subspan(i * dim, dim);
    double mean = 0.0;
    for (double x : row) mean += x;
    mean /= static_cast<double>(dim);
    double ss = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        const double v = row[k] - mean;
        c.data[i * dim + k] = v;
        ss += v * v;
    }
    c.norms[i] = std::sqrt(ss);
}

double pearson_entry(const CenteredRows& c, std::size_t dim, std::size_t i, std::size_t j) {
    if (i == j) return 1.0;
    const double denom = c.norms[i] * c.norms[j];
    if (denom <= 0.0) return 0.0;
    const double r =
        dot(std::span(c.data).subspan(i * dim, dim), std::span(c.data).subspan(j * dim, dim)) /
        denom;
    return std::clamp(r, -1.0, 1.0);
}

std::size_t count_constant(const CenteredRows& c) {
    return static_cast<std::size_t>(
        std::count_if(c.norms.begin(), c.norms.end(), [](double n) { return n <= 0.0; }));
}

}  // namespace

void dot_scan(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(out.size());
    const bool wide = out.size() * dim >= kParallelWork;
#pragma omp parallel for if (wide) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out[i] = dot(rows.subspan(static_cast<std::size_t>(i) * dim, dim), query);
}

std::size_t pearson(std::span<const double> rows, std::size_t dim, std::span<double> out) {
    const std::size_t n = rows.size() / dim;
    CenteredRows c{std::vector<double>(rows.size()), std::vector<double>(n)};
    const bool wide = n * n * dim >= kParallelWork;
    const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel if (wide)
    {
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < sn; ++i) center_row(rows, dim, i, c);
        // Upper triangle, mirrored; rows get shorter so hand out dynamically.
#pragma omp for schedule(dynamic, 4)
        for (std::ptrdiff_t i = 0; i < sn; ++i) {
            for (std::size_t j = i; j < n; ++j) {
                const double r = pearson_entry(c, dim, i, j);
                out[i * n + j] = r;
                out[j * n + i] = r;
            }
        }
    }
    return count_constant(c);
}

namespace serial {

void dot_scan(std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = dot(rows.subspan(i * dim, dim), query);
}

std::size_t pearson(std::span<const double> rows, std::size_t dim, std::span<double> out) {
    const std::size_t n = rows.size() / dim;
    CenteredRows c{std::vector<double>(rows.size()), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) center_row(rows, dim, i, c);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = pearson_entry(c, dim, i, j);
    return count_constant(c);
}

}  // namespace serial
}  // namespace kernels
}  // namespace memdrop
