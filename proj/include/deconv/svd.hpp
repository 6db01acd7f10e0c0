#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "deconv/error.hpp"
#include "deconv/ratings.hpp"
#include "deconv/rng.hpp"

namespace deconv {

struct SvdOptions {
    int k = 1;
    double tol = 1e-9;  // residual bound relative to sigma_1
    std::uint64_t seed = 0;
    int oversample = 10;
    int max_sweeps = 0;  // 0 -> 10*k
};

/// Top-k singular triplets. Columns of U and V are orthonormal; sigma is
/// nonincreasing. rank_deficient marks that fewer than the requested k
/// numerically nonzero triplets exist; sigma then holds the achievable rank.
struct SpectralDecomposition {
    Mat U;
    Vec sigma;
    Mat V;
    int k_requested = 0;
    bool rank_deficient = false;

    int k() const { return static_cast<int>(sigma.size()); }
};

namespace detail {

inline Mat thin_q(const Mat& y) {
    Eigen::HouseholderQR<Mat> qr(y);
    return qr.householderQ() * Mat::Identity(y.rows(), y.cols());
}

}  // namespace detail

/// Randomized subspace iteration with explicit reorthogonalization. A seeded
/// Gaussian start block is refined by power sweeps until every retained
/// triplet satisfies ||A v_i - sigma_i u_i|| <= tol * sigma_1, so the result
/// is deterministic for a fixed seed. Exact whenever k + oversample reaches
/// min(m, n), which covers the full-rank runs used on the desk datasets.
inline SpectralDecomposition truncated_svd(const SpMat& a, const SvdOptions& opt) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    const int min_dim = std::min(m, n);
    if (opt.k < 1 || opt.k > min_dim) {
        throw std::invalid_argument("k must be in [1, min(n_users, n_items)]");
    }
    if (!(opt.tol > 0.0)) throw std::invalid_argument("tol must be positive");

    const int sketch = std::min(opt.k + std::max(opt.oversample, 0), min_dim);
    const int cap = opt.max_sweeps > 0 ? opt.max_sweeps : 10 * opt.k;

    Rng rng(derive_seed(opt.seed, 0x5bd1e995u));
    Mat start(n, sketch);
    for (int j = 0; j < sketch; ++j) {
        for (int i = 0; i < n; ++i) start(i, j) = rng.normal();
    }

    Mat q = detail::thin_q(a * start);

    double best_residual = std::numeric_limits<double>::infinity();
    for (int sweep = 0;; ++sweep) {
        const Mat b = q.transpose() * a;  // sketch x n
        Eigen::BDCSVD<Mat> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vec& sb = svd.singularValues();

        const double rank_tol =
            sb.size() > 0 ? sb(0) * std::max(m, n) * std::numeric_limits<double>::epsilon() : 0.0;
        int achieved = 0;
        while (achieved < opt.k && achieved < static_cast<int>(sb.size()) &&
               sb(achieved) > rank_tol) {
            ++achieved;
        }

        SpectralDecomposition dec;
        dec.k_requested = opt.k;
        dec.rank_deficient = achieved < opt.k;
        dec.sigma = sb.head(achieved);
        dec.U = q * svd.matrixU().leftCols(achieved);
        dec.V = svd.matrixV().leftCols(achieved);

        if (achieved == 0) return dec;  // zero matrix

        const Mat av = a * dec.V;
        double max_rel = 0.0;
        for (int i = 0; i < achieved; ++i) {
            const double res = (av.col(i) - dec.sigma(i) * dec.U.col(i)).norm();
            max_rel = std::max(max_rel, res / sb(0));
        }
        if (max_rel <= opt.tol) return dec;
        best_residual = std::min(best_residual, max_rel);

        if (sweep >= cap) {
            throw NumericError("truncated SVD did not converge within " + std::to_string(cap) +
                                   " sweeps; best relative residual " +
                                   std::to_string(best_residual),
                               best_residual);
        }

        // Power sweep: pull the sketch toward the dominant subspace.
        q = detail::thin_q(a * detail::thin_q(a.transpose() * q));
    }
}

inline SpectralDecomposition truncated_svd(const NormalizedMatrix& m, const SvdOptions& opt) {
    return truncated_svd(m.matrix(), opt);
}

}  // namespace deconv
