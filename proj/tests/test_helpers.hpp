#pragma once

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "deconv/ratings.hpp"
#include "deconv/rng.hpp"

namespace deconv::fixtures {

/// Random sparse ratings matrix on the 1-5 integer scale. Every user and
/// every item is guaranteed at least one rating.
inline RatingsMatrix random_ratings(int n_users, int n_items, double density, std::uint64_t seed) {
    Rng rng(seed);
    std::set<std::pair<int, int>> cells;
    for (int u = 0; u < n_users; ++u) {
        for (int i = 0; i < n_items; ++i) {
            if (rng.uniform() < density) cells.emplace(u, i);
        }
    }
    for (int u = 0; u < n_users; ++u) {
        bool has = false;
        for (int i = 0; i < n_items && !has; ++i) has = cells.count({u, i}) > 0;
        if (!has) cells.emplace(u, static_cast<int>(rng.bounded(n_items)));
    }
    for (int i = 0; i < n_items; ++i) {
        bool has = false;
        for (int u = 0; u < n_users && !has; ++u) has = cells.count({u, i}) > 0;
        if (!has) cells.emplace(static_cast<int>(rng.bounded(n_users)), i);
    }
    std::vector<RatingEntry> entries;
    entries.reserve(cells.size());
    for (const auto& [u, i] : cells) {
        entries.push_back({u, i, static_cast<double>(1 + rng.bounded(5))});
    }
    return RatingsMatrix(n_users, n_items, std::move(entries));
}

/// Dense Gaussian matrix with a pinned generator.
inline Mat random_dense(int rows, int cols, std::uint64_t seed) {
    Rng rng(seed);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    }
    return m;
}

}  // namespace deconv::fixtures
