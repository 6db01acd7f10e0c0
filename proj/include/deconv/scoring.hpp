#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "deconv/error.hpp"
#include "deconv/rng.hpp"
#include "deconv/spectral.hpp"

namespace deconv {

struct RansacParams {
    int iterations = 200;
    // Inlier threshold per item: factor times the spread of the item's
    // observed coordinates, floored to stay positive when the spread is 0.
    double inlier_threshold_factor = 0.05;
    double inlier_threshold_floor = 1e-12;
    int min_inliers = 2;
    int min_points = 3;
    std::uint64_t seed = 0;
    // Scale x per item instead of globally. Off by default; the global rule
    // is the one used for reported scores.
    bool per_item_scaling = false;
};

enum class FitStatus { Fitted, Skipped };

/// Robust line through one item's (deconvolved, observed) points.
/// inlier_mask is aligned with the item's point list in ascending user order.
struct ItemLineFit {
    int item = -1;
    FitStatus status = FitStatus::Skipped;
    std::string skip_reason;
    Eigen::Vector2d anchor = Eigen::Vector2d::Zero();      // inlier centroid, on the line
    Eigen::Vector2d direction = Eigen::Vector2d::UnitY();  // unit length
    std::vector<char> inlier_mask;
    int n_inliers = 0;
};

struct ItemPoints {
    int item;
    std::vector<Eigen::Vector2d> points;  // (deconvolved, observed), user-ascending
};

/// One observed cell after the rigid motion: x is the signed perpendicular
/// offset from the item's line (the deconvolved direction), y the signed
/// position along it, measured from the inlier-centroid anchor.
struct ScoredRating {
    int user;
    int item;
    double x;
    double y;
    double score;
};

struct RSScore {
    double value = 0.0;
    std::int64_t n_scored = 0;
    std::int64_t n_nonzero = 0;
};

struct ItemRankEntry {
    int item;
    double mean_score;
    std::int64_t n_ratings;
};

inline std::vector<ItemPoints> group_pairs_by_item(const std::vector<CellPair>& pairs,
                                                   int n_items) {
    std::vector<std::vector<Eigen::Vector2d>> buckets(static_cast<std::size_t>(n_items));
    for (const auto& p : pairs) {
        buckets[static_cast<std::size_t>(p.item)].emplace_back(p.deconvolved, p.observed);
    }
    std::vector<ItemPoints> out;
    for (int i = 0; i < n_items; ++i) {
        if (!buckets[static_cast<std::size_t>(i)].empty()) {
            out.push_back({i, std::move(buckets[static_cast<std::size_t>(i)])});
        }
    }
    return out;
}

namespace detail {

inline Eigen::Vector2d canonical_direction(Eigen::Vector2d dir) {
    if (dir.x() < 0.0 || (dir.x() == 0.0 && dir.y() < 0.0)) dir = -dir;
    return dir;
}

inline ItemLineFit fit_one_item(const ItemPoints& item, const RansacParams& params) {
    ItemLineFit fit;
    fit.item = item.item;
    const auto& pts = item.points;
    const int n = static_cast<int>(pts.size());

    if (n < params.min_points) {
        fit.skip_reason = "too few ratings";
        return fit;
    }

    double lo = pts[0].y(), hi = pts[0].y();
    for (const auto& p : pts) {
        lo = std::min(lo, p.y());
        hi = std::max(hi, p.y());
    }
    const double threshold =
        std::max(params.inlier_threshold_factor * (hi - lo), params.inlier_threshold_floor);

    Rng rng(derive_seed(params.seed, 0x11e5, static_cast<std::uint64_t>(item.item)));
    int best_count = 0;
    Eigen::Vector2d best_point = Eigen::Vector2d::Zero();
    Eigen::Vector2d best_dir = Eigen::Vector2d::UnitY();
    for (int it = 0; it < params.iterations; ++it) {
        const int a = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n)));
        int b = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n - 1)));
        if (b >= a) ++b;
        Eigen::Vector2d diff = pts[b] - pts[a];
        const double len = diff.norm();
        if (len == 0.0) continue;  // coincident sample
        const Eigen::Vector2d dir = diff / len;
        const Eigen::Vector2d normal(-dir.y(), dir.x());
        int count = 0;
        for (const auto& p : pts) {
            if (std::abs((p - pts[a]).dot(normal)) <= threshold) ++count;
        }
        if (count > best_count) {
            best_count = count;
            best_point = pts[a];
            best_dir = dir;
        }
    }

    if (best_count == 0) {
        fit.skip_reason = "degenerate points";
        return fit;
    }
    if (best_count < params.min_inliers) {
        fit.skip_reason = "too few inliers";
        return fit;
    }

    const Eigen::Vector2d best_normal(-best_dir.y(), best_dir.x());
    fit.inlier_mask.assign(static_cast<std::size_t>(n), 0);
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (int i = 0; i < n; ++i) {
        if (std::abs((pts[static_cast<std::size_t>(i)] - best_point).dot(best_normal)) <=
            threshold) {
            fit.inlier_mask[static_cast<std::size_t>(i)] = 1;
            centroid += pts[static_cast<std::size_t>(i)];
            ++fit.n_inliers;
        }
    }
    centroid /= fit.n_inliers;

    // Orthogonal least-squares refit on the inlier set: principal axis of the
    // inlier scatter, anchored at the inlier centroid.
    Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
    for (int i = 0; i < n; ++i) {
        if (!fit.inlier_mask[static_cast<std::size_t>(i)]) continue;
        const Eigen::Vector2d d = pts[static_cast<std::size_t>(i)] - centroid;
        scatter += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(scatter);
    // Eigenvalues ascend; the dominant axis is the second column.
    fit.direction = canonical_direction(eig.eigenvectors().col(1));
    fit.anchor = centroid;
    fit.status = FitStatus::Fitted;
    return fit;
}

template <typename Fn>
inline void parallel_for(int count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    const int n_threads = std::min(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t]() {
            for (int i = t; i < count; i += n_threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// RANSAC line per item: `iterations` two-point samples, inliers within the
/// item's threshold, best consensus refit by orthogonal least squares.
/// Items below min_points are reported as skipped, not fitted.
inline std::vector<ItemLineFit> fit_item_lines(const std::vector<ItemPoints>& items,
                                               const RansacParams& params, int threads = 1) {
    if (params.iterations < 1) throw std::invalid_argument("ransac iterations must be >= 1");
    if (params.min_inliers < 2) throw std::invalid_argument("min_inliers must be >= 2");
    if (!(params.inlier_threshold_factor > 0.0) || !(params.inlier_threshold_floor > 0.0)) {
        throw std::invalid_argument("inlier threshold must be positive");
    }
    std::vector<ItemLineFit> fits(items.size());
    detail::parallel_for(static_cast<int>(items.size()), threads, [&](int i) {
        fits[static_cast<std::size_t>(i)] =
            detail::fit_one_item(items[static_cast<std::size_t>(i)], params);
    });
    return fits;
}

/// Rigid motion carrying the fitted line onto the y-axis: x becomes the
/// signed perpendicular offset, y the signed along-line coordinate from the
/// anchor.
inline std::vector<Eigen::Vector2d> rotate_translate(const std::vector<Eigen::Vector2d>& points,
                                                     const ItemLineFit& fit) {
    const Eigen::Vector2d normal(-fit.direction.y(), fit.direction.x());
    std::vector<Eigen::Vector2d> out;
    out.reserve(points.size());
    for (const auto& p : points) {
        const Eigen::Vector2d d = p - fit.anchor;
        out.emplace_back(d.dot(normal), d.dot(fit.direction));
    }
    return out;
}

/// Hyperbola-vertex score with unit asymptote slope: sqrt(x^2 - y^2) outside
/// the cone |x| > |y|, exactly zero inside.
inline double score_rating(double x, double y) {
    const double ax = std::abs(x);
    const double ay = std::abs(y);
    if (ax <= ay) return 0.0;
    return std::sqrt((ax - ay) * (ax + ay));
}

/// Rescales all x so the dataset-wide max |x| matches max |y|. When the
/// perpendicular spread is zero (or numerically indistinguishable from it,
/// below 1e-12 of the along-line spread) every x collapses to zero and all
/// downstream scores vanish.
inline double scale_points(std::vector<ScoredRating>& points) {
    double max_x = 0.0, max_y = 0.0;
    for (const auto& p : points) {
        max_x = std::max(max_x, std::abs(p.x));
        max_y = std::max(max_y, std::abs(p.y));
    }
    if (max_x <= 1e-12 * max_y) {
        for (auto& p : points) p.x = 0.0;
        return 0.0;
    }
    if (max_x == 0.0) return 1.0;  // max_y is 0 too; nothing to scale
    const double factor = max_y / max_x;
    for (auto& p : points) p.x *= factor;
    return factor;
}

inline RSScore rs_score(const std::vector<ScoredRating>& scored) {
    if (scored.empty()) throw DataError("no scored ratings");
    RSScore rs;
    rs.n_scored = static_cast<std::int64_t>(scored.size());
    for (const auto& s : scored) {
        if (s.score > 0.0) ++rs.n_nonzero;
    }
    rs.value = static_cast<double>(rs.n_nonzero) / static_cast<double>(rs.n_scored);
    return rs;
}

/// Ascending per-item mean score; ties break on the original item ID when
/// provided, otherwise on the compact index.
inline std::vector<ItemRankEntry> item_rank(const std::vector<ScoredRating>& scored,
                                            const std::vector<std::string>& item_ids = {}) {
    int max_item = -1;
    for (const auto& s : scored) max_item = std::max(max_item, s.item);
    std::vector<double> sum(static_cast<std::size_t>(max_item + 1), 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(max_item + 1), 0);
    for (const auto& s : scored) {
        sum[static_cast<std::size_t>(s.item)] += s.score;
        count[static_cast<std::size_t>(s.item)] += 1;
    }
    std::vector<ItemRankEntry> out;
    for (int i = 0; i <= max_item; ++i) {
        if (count[static_cast<std::size_t>(i)] > 0) {
            out.push_back({i, sum[static_cast<std::size_t>(i)] / count[static_cast<std::size_t>(i)],
                           count[static_cast<std::size_t>(i)]});
        }
    }
    std::sort(out.begin(), out.end(), [&](const ItemRankEntry& a, const ItemRankEntry& b) {
        if (a.mean_score != b.mean_score) return a.mean_score < b.mean_score;
        if (!item_ids.empty()) {
            return item_ids[static_cast<std::size_t>(a.item)] <
                   item_ids[static_cast<std::size_t>(b.item)];
        }
        return a.item < b.item;
    });
    return out;
}

struct ScoringResult {
    std::vector<ItemLineFit> fits;     // one per item holding ratings, item-ascending
    std::vector<ScoredRating> scored;  // cells on fitted items, (user, item)-sorted
    RSScore rs;
    std::int64_t n_skipped_ratings = 0;  // cells on skipped items, excluded from rs
    std::vector<ItemRankEntry> ranking;
    double x_scale = 1.0;
};

/// Full scoring pipeline: per-item RANSAC, rigid motion, scaling, hyperbola
/// scores, dataset RS score and the ascending item ranking.
inline ScoringResult score_pairs(const std::vector<CellPair>& pairs, int n_items,
                                 const RansacParams& params,
                                 const std::vector<std::string>& item_ids = {}, int threads = 1) {
    ScoringResult result;
    std::vector<ItemPoints> grouped = group_pairs_by_item(pairs, n_items);
    result.fits = fit_item_lines(grouped, params, threads);

    std::vector<const ItemLineFit*> fit_of(static_cast<std::size_t>(n_items), nullptr);
    for (const auto& f : result.fits) fit_of[static_cast<std::size_t>(f.item)] = &f;

    result.scored.reserve(pairs.size());
    for (const auto& p : pairs) {
        const ItemLineFit* fit = fit_of[static_cast<std::size_t>(p.item)];
        if (fit == nullptr || fit->status != FitStatus::Fitted) {
            ++result.n_skipped_ratings;
            continue;
        }
        const Eigen::Vector2d normal(-fit->direction.y(), fit->direction.x());
        const Eigen::Vector2d d = Eigen::Vector2d(p.deconvolved, p.observed) - fit->anchor;
        result.scored.push_back({p.user, p.item, d.dot(normal), d.dot(fit->direction), 0.0});
    }

    if (result.scored.empty()) {
        throw DataError("no scored ratings: every item was skipped");
    }

    if (params.per_item_scaling) {
        std::vector<double> max_x(static_cast<std::size_t>(n_items), 0.0);
        std::vector<double> max_y(static_cast<std::size_t>(n_items), 0.0);
        for (const auto& s : result.scored) {
            max_x[static_cast<std::size_t>(s.item)] =
                std::max(max_x[static_cast<std::size_t>(s.item)], std::abs(s.x));
            max_y[static_cast<std::size_t>(s.item)] =
                std::max(max_y[static_cast<std::size_t>(s.item)], std::abs(s.y));
        }
        for (auto& s : result.scored) {
            const double mx = max_x[static_cast<std::size_t>(s.item)];
            const double my = max_y[static_cast<std::size_t>(s.item)];
            s.x = (mx <= 1e-12 * my || mx == 0.0) ? 0.0 : s.x * (my / mx);
        }
        result.x_scale = 0.0;
    } else {
        result.x_scale = scale_points(result.scored);
    }

    for (auto& s : result.scored) s.score = score_rating(s.x, s.y);
    result.rs = rs_score(result.scored);
    result.ranking = item_rank(result.scored, item_ids);
    return result;
}

}  // namespace deconv
