#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "deconv/error.hpp"

namespace deconv {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

struct RatingEntry {
    int user;
    int item;
    double value;
};

inline bool cell_order(const RatingEntry& a, const RatingEntry& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
}

/// Input format and filtering parameters for one dataset.
struct DatasetSpec {
    enum class Format { Csv, Ml100k, Ml1m, Jester };

    Format format = Format::Csv;
    int min_rpi = 1;  // minimum ratings per item kept
    double scale_min = 1.0;
    double scale_max = 5.0;

    /// Per-format presets: min RPI 50 for the MovieLens sets, 1 elsewhere;
    /// Jester rates on the continuous -10..+10 scale.
    static DatasetSpec for_format(Format f) {
        DatasetSpec spec;
        spec.format = f;
        if (f == Format::Ml100k || f == Format::Ml1m) spec.min_rpi = 50;
        if (f == Format::Jester) {
            spec.scale_min = -10.0;
            spec.scale_max = 10.0;
        }
        return spec;
    }
};

/// Sparse user-item rating triplets with compact contiguous indices.
/// Entries are kept sorted by (user, item) and unique; every user and every
/// item has at least one rating. Original IDs are retained as a sidecar.
class RatingsMatrix {
public:
    RatingsMatrix(int n_users, int n_items, std::vector<RatingEntry> entries,
                  std::vector<std::string> user_ids = {}, std::vector<std::string> item_ids = {})
        : n_users_(n_users),
          n_items_(n_items),
          entries_(std::move(entries)),
          user_ids_(std::move(user_ids)),
          item_ids_(std::move(item_ids)) {
        std::sort(entries_.begin(), entries_.end(), cell_order);
        validate();
        if (user_ids_.empty()) user_ids_ = default_ids(n_users_);
        if (item_ids_.empty()) item_ids_ = default_ids(n_items_);
        if (static_cast<int>(user_ids_.size()) != n_users_ ||
            static_cast<int>(item_ids_.size()) != n_items_) {
            throw DataError("ID sidecar size does not match matrix dimensions");
        }
    }

    int n_users() const { return n_users_; }
    int n_items() const { return n_items_; }
    const std::vector<RatingEntry>& entries() const { return entries_; }
    std::size_t n_ratings() const { return entries_.size(); }

    const std::string& user_id(int u) const { return user_ids_[static_cast<std::size_t>(u)]; }
    const std::string& item_id(int i) const { return item_ids_[static_cast<std::size_t>(i)]; }
    const std::vector<std::string>& user_ids() const { return user_ids_; }
    const std::vector<std::string>& item_ids() const { return item_ids_; }

    SpMat to_sparse() const {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(entries_.size());
        for (const auto& e : entries_) trips.emplace_back(e.user, e.item, e.value);
        SpMat m(n_users_, n_items_);
        m.setFromTriplets(trips.begin(), trips.end());
        return m;
    }

    Mat to_dense() const {
        Mat m = Mat::Zero(n_users_, n_items_);
        for (const auto& e : entries_) m(e.user, e.item) = e.value;
        return m;
    }

    bool has_cell(int user, int item) const {
        RatingEntry probe{user, item, 0.0};
        auto it = std::lower_bound(entries_.begin(), entries_.end(), probe, cell_order);
        return it != entries_.end() && it->user == user && it->item == item;
    }

private:
    void validate() const {
        std::vector<char> user_seen(static_cast<std::size_t>(n_users_), 0);
        std::vector<char> item_seen(static_cast<std::size_t>(n_items_), 0);
        for (std::size_t j = 0; j < entries_.size(); ++j) {
            const auto& e = entries_[j];
            if (e.user < 0 || e.user >= n_users_ || e.item < 0 || e.item >= n_items_) {
                throw DataError("rating index out of range");
            }
            if (j > 0 && entries_[j - 1].user == e.user && entries_[j - 1].item == e.item) {
                throw DataError("duplicate rating for user " + std::to_string(e.user) +
                                ", item " + std::to_string(e.item));
            }
            user_seen[static_cast<std::size_t>(e.user)] = 1;
            item_seen[static_cast<std::size_t>(e.item)] = 1;
        }
        if (std::find(user_seen.begin(), user_seen.end(), 0) != user_seen.end()) {
            throw DataError("matrix has a user with no ratings");
        }
        if (std::find(item_seen.begin(), item_seen.end(), 0) != item_seen.end()) {
            throw DataError("matrix has an item with no ratings");
        }
    }

    static std::vector<std::string> default_ids(int n) {
        std::vector<std::string> ids;
        ids.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
        return ids;
    }

    int n_users_;
    int n_items_;
    std::vector<RatingEntry> entries_;
    std::vector<std::string> user_ids_;
    std::vector<std::string> item_ids_;
};

/// Drops items with fewer than min_rpi ratings, then users left with none,
/// and compacts indices. The ID sidecar follows the surviving rows/columns.
inline RatingsMatrix filter_min_rpi(const RatingsMatrix& r, int min_rpi) {
    if (min_rpi < 1) throw std::invalid_argument("min_rpi must be >= 1");

    std::vector<int> item_count(static_cast<std::size_t>(r.n_items()), 0);
    for (const auto& e : r.entries()) item_count[static_cast<std::size_t>(e.item)]++;

    std::vector<int> item_map(static_cast<std::size_t>(r.n_items()), -1);
    std::vector<std::string> item_ids;
    int next_item = 0;
    for (int i = 0; i < r.n_items(); ++i) {
        if (item_count[static_cast<std::size_t>(i)] >= min_rpi) {
            item_map[static_cast<std::size_t>(i)] = next_item++;
            item_ids.push_back(r.item_id(i));
        }
    }

    std::vector<char> user_alive(static_cast<std::size_t>(r.n_users()), 0);
    for (const auto& e : r.entries()) {
        if (item_map[static_cast<std::size_t>(e.item)] >= 0) {
            user_alive[static_cast<std::size_t>(e.user)] = 1;
        }
    }
    std::vector<int> user_map(static_cast<std::size_t>(r.n_users()), -1);
    std::vector<std::string> user_ids;
    int next_user = 0;
    for (int u = 0; u < r.n_users(); ++u) {
        if (user_alive[static_cast<std::size_t>(u)]) {
            user_map[static_cast<std::size_t>(u)] = next_user++;
            user_ids.push_back(r.user_id(u));
        }
    }

    if (next_user == 0 || next_item == 0) {
        throw DataError("empty matrix after min_rpi filtering");
    }

    std::vector<RatingEntry> kept;
    kept.reserve(r.entries().size());
    for (const auto& e : r.entries()) {
        const int ni = item_map[static_cast<std::size_t>(e.item)];
        if (ni >= 0) kept.push_back({user_map[static_cast<std::size_t>(e.user)], ni, e.value});
    }
    return RatingsMatrix(next_user, next_item, std::move(kept), std::move(user_ids),
                         std::move(item_ids));
}

/// User-centered, item-normalized view of a ratings matrix. Observed cell
/// (u,i) holds (R_ui - mean_u) / norm_i; unobserved cells are exactly zero.
/// Items whose centered column norm falls below epsilon are dropped: they
/// keep their index but carry no entries and a zero recorded norm.
class NormalizedMatrix {
public:
    static NormalizedMatrix from_parts(int n_users, int n_items, std::vector<RatingEntry> entries,
                                       Vec user_means, Vec item_norms,
                                       std::vector<int> dropped_items = {}) {
        return NormalizedMatrix(n_users, n_items, std::move(entries), std::move(user_means),
                                std::move(item_norms), std::move(dropped_items));
    }

    /// Wraps an already-normalized dense matrix; every cell becomes observed.
    static NormalizedMatrix from_dense(const Mat& m) {
        std::vector<RatingEntry> entries;
        entries.reserve(static_cast<std::size_t>(m.size()));
        for (int u = 0; u < m.rows(); ++u) {
            for (int i = 0; i < m.cols(); ++i) {
                entries.push_back({u, static_cast<int>(i), m(u, i)});
            }
        }
        return NormalizedMatrix(static_cast<int>(m.rows()), static_cast<int>(m.cols()),
                                std::move(entries), Vec::Zero(m.rows()), Vec::Ones(m.cols()), {});
    }

    int n_users() const { return n_users_; }
    int n_items() const { return n_items_; }
    const std::vector<RatingEntry>& entries() const { return entries_; }
    const Vec& user_means() const { return user_means_; }
    const Vec& item_norms() const { return item_norms_; }
    const std::vector<int>& dropped_items() const { return dropped_items_; }
    const SpMat& matrix() const { return matrix_; }

private:
    NormalizedMatrix(int n_users, int n_items, std::vector<RatingEntry> entries, Vec user_means,
                     Vec item_norms, std::vector<int> dropped_items)
        : n_users_(n_users),
          n_items_(n_items),
          entries_(std::move(entries)),
          user_means_(std::move(user_means)),
          item_norms_(std::move(item_norms)),
          dropped_items_(std::move(dropped_items)) {
        std::sort(entries_.begin(), entries_.end(), cell_order);
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(entries_.size());
        for (const auto& e : entries_) trips.emplace_back(e.user, e.item, e.value);
        matrix_.resize(n_users_, n_items_);
        matrix_.setFromTriplets(trips.begin(), trips.end());
    }

    int n_users_;
    int n_items_;
    std::vector<RatingEntry> entries_;
    Vec user_means_;
    Vec item_norms_;
    std::vector<int> dropped_items_;
    SpMat matrix_;
};

/// Centers each user's observed ratings at their mean, then scales each item
/// column to unit Euclidean norm. Zero-norm items carry no preference signal
/// and are dropped rather than regularized.
inline NormalizedMatrix center_and_normalize(const RatingsMatrix& r, double epsilon = 1e-12) {
    const int m = r.n_users();
    const int n = r.n_items();

    Vec user_sum = Vec::Zero(m);
    Eigen::VectorXi user_count = Eigen::VectorXi::Zero(m);
    for (const auto& e : r.entries()) {
        user_sum(e.user) += e.value;
        user_count(e.user) += 1;
    }
    Vec user_means(m);
    for (int u = 0; u < m; ++u) user_means(u) = user_sum(u) / user_count(u);

    Vec norm_sq = Vec::Zero(n);
    for (const auto& e : r.entries()) {
        const double c = e.value - user_means(e.user);
        norm_sq(e.item) += c * c;
    }

    Vec item_norms(n);
    std::vector<int> dropped;
    for (int i = 0; i < n; ++i) {
        const double norm = std::sqrt(norm_sq(i));
        if (norm < epsilon) {
            item_norms(i) = 0.0;
            dropped.push_back(i);
        } else {
            item_norms(i) = norm;
        }
    }
    if (static_cast<int>(dropped.size()) == n) {
        throw DataError("degenerate matrix: all items have zero centered norm");
    }

    std::vector<RatingEntry> entries;
    entries.reserve(r.entries().size());
    for (const auto& e : r.entries()) {
        if (item_norms(e.item) == 0.0) continue;
        entries.push_back({e.user, e.item, (e.value - user_means(e.user)) / item_norms(e.item)});
    }
    return NormalizedMatrix::from_parts(m, n, std::move(entries), std::move(user_means),
                                        std::move(item_norms), std::move(dropped));
}

/// Item-item adjusted cosine similarity: symmetric, unit diagonal for items
/// with nonzero centered norm, zero rows for dropped items.
struct SimilarityMatrix {
    Mat values;

    int n_items() const { return static_cast<int>(values.rows()); }
    double operator()(int i, int j) const { return values(i, j); }
};

inline SimilarityMatrix adjusted_cosine(const RatingsMatrix& r, double epsilon = 1e-12) {
    const NormalizedMatrix nm = center_and_normalize(r, epsilon);
    const SpMat& a = nm.matrix();
    Mat s = Mat(SpMat(a.transpose() * a));
    // Clamp diagonal drift and enforce exact symmetry.
    for (int i = 0; i < s.rows(); ++i) {
        for (int j = i + 1; j < s.cols(); ++j) {
            const double v = 0.5 * (s(i, j) + s(j, i));
            s(i, j) = v;
            s(j, i) = v;
        }
    }
    return SimilarityMatrix{std::move(s)};
}

}  // namespace deconv
