#include "deconv/ratings.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_helpers.hpp"

using namespace deconv;

namespace {

RatingsMatrix two_by_two() {
    // [[5, 3], [4, 1]]
    return RatingsMatrix(2, 2, {{0, 0, 5}, {0, 1, 3}, {1, 0, 4}, {1, 1, 1}});
}

/// Explicit adjusted-cosine double sum: numerator over users rating both
/// items, denominators over each item's raters. Independent of the matrix
/// formulation used by the implementation.
double adjusted_cosine_brute(const RatingsMatrix& r, int i, int j) {
    const Mat dense = r.to_dense();
    Mat present = Mat::Zero(r.n_users(), r.n_items());
    for (const auto& e : r.entries()) present(e.user, e.item) = 1.0;

    std::vector<double> mean(r.n_users(), 0.0);
    for (int u = 0; u < r.n_users(); ++u) {
        double sum = 0.0;
        int count = 0;
        for (int c = 0; c < r.n_items(); ++c) {
            if (present(u, c) > 0) {
                sum += dense(u, c);
                ++count;
            }
        }
        mean[u] = sum / count;
    }

    double num = 0.0, den_i = 0.0, den_j = 0.0;
    for (int u = 0; u < r.n_users(); ++u) {
        if (present(u, i) > 0 && present(u, j) > 0) {
            num += (dense(u, i) - mean[u]) * (dense(u, j) - mean[u]);
        }
        if (present(u, i) > 0) den_i += std::pow(dense(u, i) - mean[u], 2);
        if (present(u, j) > 0) den_j += std::pow(dense(u, j) - mean[u], 2);
    }
    if (den_i == 0.0 || den_j == 0.0) return 0.0;
    return num / (std::sqrt(den_i) * std::sqrt(den_j));
}

TEST(RatingsMatrix, RejectsDuplicatesAndBadIndices) {
    EXPECT_THROW(RatingsMatrix(2, 2, {{0, 0, 5}, {0, 0, 3}, {1, 1, 1}}), DataError);
    EXPECT_THROW(RatingsMatrix(2, 2, {{0, 2, 5}, {1, 0, 3}}), DataError);
    EXPECT_THROW(RatingsMatrix(3, 2, {{0, 0, 5}, {0, 1, 3}, {1, 0, 4}}), DataError);  // empty user
}

TEST(FilterMinRpi, IdentityOnValidMatrixAtOne) {
    RatingsMatrix r = fixtures::random_ratings(8, 5, 0.4, 11);
    RatingsMatrix f = filter_min_rpi(r, 1);
    EXPECT_EQ(f.n_users(), r.n_users());
    EXPECT_EQ(f.n_items(), r.n_items());
    ASSERT_EQ(f.entries().size(), r.entries().size());
    for (std::size_t j = 0; j < r.entries().size(); ++j) {
        EXPECT_EQ(f.entries()[j].user, r.entries()[j].user);
        EXPECT_EQ(f.entries()[j].item, r.entries()[j].item);
        EXPECT_EQ(f.entries()[j].value, r.entries()[j].value);
    }
}

TEST(FilterMinRpi, DropsSparseItemsThenEmptyUsers) {
    // Item 1 has a single rating held by user 2; both disappear at min_rpi=2.
    RatingsMatrix r(3, 2, {{0, 0, 5}, {1, 0, 4}, {2, 1, 3}});
    RatingsMatrix f = filter_min_rpi(r, 2);
    EXPECT_EQ(f.n_users(), 2);
    EXPECT_EQ(f.n_items(), 1);
    EXPECT_EQ(f.item_id(0), "1");
    EXPECT_EQ(f.user_id(0), "1");
    EXPECT_EQ(f.user_id(1), "2");
}

TEST(FilterMinRpi, EmptyResultThrows) {
    RatingsMatrix r(2, 2, {{0, 0, 5}, {0, 1, 3}, {1, 0, 4}, {1, 1, 1}});
    EXPECT_THROW(filter_min_rpi(r, 3), DataError);
}

TEST(CenterAndNormalize, CentersUserAtMean) {
    RatingsMatrix r(1, 2, {{0, 0, 5}, {0, 1, 3}});
    // Single user rating (5, 3): centered (+1, -1); each column then has norm
    // |value|, so the normalized entries are +-1.
    NormalizedMatrix nm = center_and_normalize(r);
    EXPECT_DOUBLE_EQ(nm.user_means()(0), 4.0);
    EXPECT_DOUBLE_EQ(nm.entries()[0].value, 1.0);
    EXPECT_DOUBLE_EQ(nm.entries()[1].value, -1.0);
}

TEST(CenterAndNormalize, HandArithmetic2x2) {
    NormalizedMatrix nm = center_and_normalize(two_by_two());
    EXPECT_DOUBLE_EQ(nm.user_means()(0), 4.0);
    EXPECT_DOUBLE_EQ(nm.user_means()(1), 2.5);
    EXPECT_NEAR(nm.item_norms()(0), std::sqrt(3.25), 1e-12);
    // Item 0 centered column (1, 1.5) normalized.
    EXPECT_NEAR(nm.matrix().coeff(0, 0), 0.5547001962252291, 1e-10);
    EXPECT_NEAR(nm.matrix().coeff(1, 0), 0.8320502943378437, 1e-10);
}

TEST(CenterAndNormalize, DropsZeroNormItems) {
    // User 2 rates everything identically; item 2 is rated only by them.
    RatingsMatrix r(3, 3,
                    {{0, 0, 5}, {0, 1, 3}, {1, 0, 4}, {1, 1, 1}, {2, 0, 2}, {2, 1, 2}, {2, 2, 2}});
    NormalizedMatrix nm = center_and_normalize(r);
    ASSERT_EQ(nm.dropped_items().size(), 1u);
    EXPECT_EQ(nm.dropped_items()[0], 2);
    EXPECT_EQ(nm.item_norms()(2), 0.0);
    for (const auto& e : nm.entries()) EXPECT_NE(e.item, 2);
}

TEST(CenterAndNormalize, AllItemsDroppedThrows) {
    RatingsMatrix r(2, 2, {{0, 0, 3}, {0, 1, 3}, {1, 0, 2}, {1, 1, 2}});
    EXPECT_THROW(center_and_normalize(r), DataError);
}

TEST(CenterAndNormalize, RetainedColumnsHaveUnitNorm) {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        RatingsMatrix r = fixtures::random_ratings(20, 10, 0.5, seed);
        NormalizedMatrix nm = center_and_normalize(r);
        Vec col_sq = Vec::Zero(nm.n_items());
        for (const auto& e : nm.entries()) col_sq(e.item) += e.value * e.value;
        for (int i = 0; i < nm.n_items(); ++i) {
            if (nm.item_norms()(i) > 0.0) {
                EXPECT_NEAR(col_sq(i), 1.0, 1e-9) << "item " << i << " seed " << seed;
            } else {
                EXPECT_EQ(col_sq(i), 0.0);
            }
        }
    }
}

TEST(CenterAndNormalize, SupportNeverGrows) {
    for (std::uint64_t seed : {7u, 8u, 9u}) {
        RatingsMatrix r = fixtures::random_ratings(15, 8, 0.4, seed);
        NormalizedMatrix nm = center_and_normalize(r);
        EXPECT_LE(nm.entries().size(), r.entries().size());
        for (const auto& e : nm.entries()) {
            EXPECT_TRUE(r.has_cell(e.user, e.item));
        }
    }
}

TEST(AdjustedCosine, UnitDiagonal) {
    SimilarityMatrix s = adjusted_cosine(two_by_two());
    EXPECT_NEAR(s(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(s(1, 1), 1.0, 1e-12);
}

TEST(AdjustedCosine, MatchesBruteForceOn2x2) {
    SimilarityMatrix s = adjusted_cosine(two_by_two());
    EXPECT_NEAR(s(0, 1), adjusted_cosine_brute(two_by_two(), 0, 1), 1e-12);
    // Centered columns are proportional here, so similarity is -1.
    EXPECT_NEAR(s(0, 1), -1.0, 1e-12);
}

TEST(AdjustedCosine, MatchesBruteForceOnRandomMatrices) {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        RatingsMatrix r = fixtures::random_ratings(20, 10, 0.6, seed);
        NormalizedMatrix nm = center_and_normalize(r);
        SimilarityMatrix s = adjusted_cosine(r);
        EXPECT_TRUE(s.values.isApprox(s.values.transpose()));
        for (int i = 0; i < r.n_items(); ++i) {
            if (nm.item_norms()(i) == 0.0) continue;
            for (int j = 0; j < r.n_items(); ++j) {
                if (nm.item_norms()(j) == 0.0) continue;
                EXPECT_NEAR(s(i, j), adjusted_cosine_brute(r, i, j), 1e-10)
                    << "seed " << seed << " cell " << i << "," << j;
            }
        }
    }
}

TEST(AdjustedCosine, SimilarityBounded) {
    RatingsMatrix r = fixtures::random_ratings(12, 6, 0.7, 31);
    SimilarityMatrix s = adjusted_cosine(r);
    for (int i = 0; i < s.n_items(); ++i) {
        for (int j = 0; j < s.n_items(); ++j) {
            EXPECT_LE(std::abs(s(i, j)), 1.0 + 1e-12);
        }
    }
}

}  // namespace
