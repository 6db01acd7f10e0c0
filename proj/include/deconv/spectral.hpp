#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "deconv/error.hpp"
#include "deconv/ratings.hpp"
#include "deconv/svd.hpp"

namespace deconv {

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw std::invalid_argument("alpha must lie in (0, 1]");
    }
}

/// Inverts one singular value of the feedback series:
///   sigma_true = -1/(2 a s) + sqrt(1/(4 a^2 s^2) + 1/a).
/// Evaluated as 2s / (1 + sqrt(1 + 4 a s^2)), which is algebraically equal
/// but avoids the catastrophic cancellation of the printed form for small s.
/// Maps 0 to 0 (the continuous limit), and is bounded above by 1/sqrt(a).
inline double sigma_true(double sigma_obs, double alpha) {
    check_alpha(alpha);
    if (sigma_obs < 0.0) throw std::invalid_argument("sigma_obs must be nonnegative");
    if (sigma_obs == 0.0) return 0.0;
    return 2.0 * sigma_obs / (1.0 + std::sqrt(1.0 + 4.0 * alpha * sigma_obs * sigma_obs));
}

/// Forward feedback map sigma -> sigma / (1 - alpha sigma^2), defined only
/// while the series converges (alpha sigma^2 < 1).
inline double sigma_observed(double sigma, double alpha) {
    check_alpha(alpha);
    if (sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
    const double spectral = alpha * sigma * sigma;
    if (spectral >= 1.0) {
        throw NumericError("feedback series diverges: alpha * sigma^2 >= 1");
    }
    return sigma / (1.0 - spectral);
}

/// Applies the forward feedback map to a whole spectrum; U and V pass through
/// untouched. Used as the independent round-trip oracle for deconvolve.
inline SpectralDecomposition forward_convolve(const SpectralDecomposition& x, double alpha) {
    check_alpha(alpha);
    SpectralDecomposition out = x;
    for (int i = 0; i < x.k(); ++i) out.sigma(i) = sigma_observed(x.sigma(i), alpha);
    return out;
}

/// One observed cell with its rank-k reconstructions on both sides of the
/// transform. `observed` is reconstructed from the untransformed spectrum so
/// that both coordinates live in the same rank-k subspace.
struct CellPair {
    int user;
    int item;
    double observed;
    double deconvolved;
};

struct DeconvolutionResult {
    SpectralDecomposition decomposition;  // sigma holds the transformed spectrum
    Vec sigma_obs;                        // untransformed spectrum, same order
    double alpha = 1.0;
    std::vector<CellPair> pairs;  // observed cells, sorted by (user, item)
};

/// Algorithm: truncated SVD of the normalized observed matrix, elementwise
/// spectrum inversion, and paired per-cell reconstructions at observed cells.
inline DeconvolutionResult deconvolve(const NormalizedMatrix& m, double alpha,
                                      const SvdOptions& opt) {
    check_alpha(alpha);
    SpectralDecomposition dec = truncated_svd(m, opt);

    DeconvolutionResult result;
    result.alpha = alpha;
    result.sigma_obs = dec.sigma;
    for (int i = 0; i < dec.k(); ++i) dec.sigma(i) = sigma_true(result.sigma_obs(i), alpha);

    result.pairs.reserve(m.entries().size());
    const int k = dec.k();
    for (const auto& e : m.entries()) {
        double obs = 0.0;
        double dcv = 0.0;
        for (int j = 0; j < k; ++j) {
            const double outer = dec.U(e.user, j) * dec.V(e.item, j);
            obs += result.sigma_obs(j) * outer;
            dcv += dec.sigma(j) * outer;
        }
        result.pairs.push_back({e.user, e.item, obs, dcv});
    }
    result.decomposition = std::move(dec);
    return result;
}

}  // namespace deconv
