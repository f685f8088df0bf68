// Shared test utilities: random elements and ulp-level comparison.
#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "wsaug/core.hpp"

namespace testutil {

inline wsaug::WeightSpaceElement random_element(const wsaug::NetworkSpec& spec, std::uint64_t seed,
                                                float lo = -1.0f, float hi = 1.0f) {
    wsaug::WeightSpaceElement e = wsaug::zero_element(spec);
    auto rng = wsaug::make_rng(seed);
    for (auto& w : e.weights)
        for (float& v : w.data) v = static_cast<float>(wsaug::uniform_real(rng, lo, hi));
    for (auto& b : e.biases)
        for (float& v : b) v = static_cast<float>(wsaug::uniform_real(rng, lo, hi));
    return e;
}

/// Distance in representable floats, with +0 and -0 counted as equal.
inline std::int64_t ulp_distance(float a, float b) {
    if (a == b) return 0;
    if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<std::int64_t>::max();
    auto key = [](float x) {
        std::int32_t i = std::bit_cast<std::int32_t>(x);
        return i >= 0 ? static_cast<std::int64_t>(i)
                      : static_cast<std::int64_t>(std::numeric_limits<std::int32_t>::min()) - i;
    };
    return std::abs(key(a) - key(b));
}

inline std::int64_t max_ulp_distance(const wsaug::WeightSpaceElement& a,
                                     const wsaug::WeightSpaceElement& b) {
    std::int64_t worst = 0;
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        for (std::size_t i = 0; i < a.weights[l].data.size(); ++i)
            worst = std::max(worst, ulp_distance(a.weights[l].data[i], b.weights[l].data[i]));
        for (std::size_t i = 0; i < a.biases[l].size(); ++i)
            worst = std::max(worst, ulp_distance(a.biases[l][i], b.biases[l][i]));
    }
    return worst;
}

} // namespace testutil
