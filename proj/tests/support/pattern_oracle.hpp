#pragma once

#include <cmath>

#include "mcg/motion_pattern.hpp"

namespace mcg::testing {

/// Nested loops straight from the definition: cosine similarity, then a
/// softmax over every (h, w) of each target frame.
inline Tensor brute_force_maps(const Tensor& f, GridPos p, std::size_t src, std::size_t count, double tau, bool divide) {
    const std::size_t c = f.dim(0), h = f.dim(2), w = f.dim(3);
    auto sim = [&](std::size_t i, std::size_t j, std::size_t k) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double a = f.at(ch, src, p.j, p.k), b = f.at(ch, i, j, k);
            dot += a * b;
            na += a * a;
            nb += b * b;
        }
        return dot / (std::max(std::sqrt(na), kNormFloor) * std::max(std::sqrt(nb), kNormFloor));
    };
    Tensor out({count, h, w});
    for (std::size_t n = 0; n < count; ++n) {
        const std::size_t i = src + 1 + n;
        double denom = 0.0;
        for (std::size_t j = 0; j < h; ++j)
            for (std::size_t k = 0; k < w; ++k) denom += std::exp(divide ? sim(i, j, k) / tau : sim(i, j, k) * tau);
        for (std::size_t j = 0; j < h; ++j)
            for (std::size_t k = 0; k < w; ++k)
                out[(n * h + j) * w + k] = std::exp(divide ? sim(i, j, k) / tau : sim(i, j, k) * tau) / denom;
    }
    return out;
}

}  // namespace mcg::testing
