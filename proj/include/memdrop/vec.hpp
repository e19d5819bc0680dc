#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace memdrop {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline bool all_finite(std::span<const double> a) {
    for (double x : a)
        if (!std::isfinite(x)) return false;
    return true;
}

/// a / ||a||; caller guarantees ||a|| > 0.
inline Vector normalized(std::span<const double> a) {
    const double n = norm(a);
    Vector out(a.begin(), a.end());
    for (double& x : out) x /= n;
    return out;
}

/// Max-subtracted, temperature-1 softmax.
Vector softmax(std::span<const double> logits);

}  // namespace memdrop
