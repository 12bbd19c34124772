#pragma once

#include <span>
#include <vector>

#include "cpd/time_series.hpp"

namespace cpd {

// Biased sample autocovariances gamma_0..gamma_p of one segment. The common
// divisor n keeps the implied Toeplitz matrix positive semi-definite.
struct AutocovarianceVector {
    std::vector<double> gamma;
    int segment_len = 0;

    int max_lag() const { return static_cast<int>(gamma.size()) - 1; }
};

// Fitted AR(p): x_t = phi_1 x_{t-1} + ... + phi_p x_{t-p} + e_t,
// Var(e_t) = sigma2. p = 0 (empty phi) is a legal white-noise model.
struct ArModel {
    std::vector<double> phi;
    double sigma2 = 0.0;

    int order() const { return static_cast<int>(phi.size()); }
};

// Half-open 0-based index interval [begin, end).
struct IndexRange {
    int begin = 0;
    int end = 0;
};

// Default order cap for a segment of length n: min(floor(10*log10 n),
// floor(n/10)), clamped to [0, n-2].
int default_max_lag(int n);

// gamma_k = (1/n) sum_{t=0}^{n-1-k} (x_t - m)(x_{t+k} - m) with m the
// segment mean. Requires n >= max_lag + 2.
AutocovarianceVector sample_autocovariance(std::span<const double> segment,
                                           int max_lag);

// Solves the order-p Yule-Walker system by the Levinson-Durbin recursion.
// Requires gamma_0 > 0 and lags 0..p present; every reflection coefficient
// must stay inside (-1, 1) or the input was not positive definite.
ArModel yule_walker(const AutocovarianceVector& acv, int p);

// Innovation variances sigma2_m for m = 0..completed order from a single
// Levinson pass; stops early (result shorter than requested) if the
// recursion breaks down. Used by AIC order selection.
std::vector<double> innovation_variances(const AutocovarianceVector& acv,
                                         int p_max);

// argmin_p of AIC(p) = n ln(sigma2_p) + 2p over p in {0..p_max}; ties go to
// the smallest p. Orders with sigma2_p <= 0 or past a recursion breakdown
// are skipped.
int select_lag_aic(std::span<const double> segment, int p_max);

// f(lambda) = sigma2 / (2 pi |1 - sum_j phi_j e^{-i j lambda}|^2).
std::vector<double> ar_spectral_density(const ArModel& model,
                                        std::span<const double> lambdas);

// e_t = x_t - phi' (x_{t-1},...,x_{t-p}) for t in [range.begin, range.end).
// Requires range.begin >= p so every lag exists.
std::vector<double> residuals(std::span<const double> x, const ArModel& model,
                              IndexRange range);

} // namespace cpd
