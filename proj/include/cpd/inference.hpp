#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cpd/parallel.hpp"
#include "cpd/time_series.hpp"
#include "cpd/ts_core.hpp"

namespace cpd {

// Plug-in estimates of the variance parameters that drive the limiting
// process, computed from the split at k_tilde.
struct NuisanceEstimates {
    double xi2 = 0.0; // ||phi_pre - phi_post||_2, the jump size
    double sigma1_sq = 0.0;
    double sigma2_sq = 0.0;
    double sigma1_star_sq = 0.0;
    double sigma2_star_sq = 0.0;
    double resid_var_pre = 0.0;
    double resid_var_post = 0.0;
};

// sigma_j*^2 estimator. All three reduce to the same limit as the jump
// shrinks; they differ in how much finite-jump structure they keep.
//   long_run:   quarter of the Newey-West long-run variance of the loss
//               increment 2 e_t u_t + u_t^2 (u = eta' Z). Default: at
//               finite jump sizes the quartic term and its serial
//               correlation contribute to the diffusion, and dropping them
//               leaves the intervals visibly short.
//   robust:     mean of e_t^2 u_t^2 (the martingale part alone).
//   factorized: product of the residual variance and sigma_j^2.
enum class NoiseInteraction { long_run, robust, factorized };

NuisanceEstimates nuisance_estimates(const TimeSeries& x, int k_tilde,
                                     const ArModel& model_pre,
                                     const ArModel& model_post, int p_common,
                                     NoiseInteraction form = NoiseInteraction::long_run);

// (sigma1, sigma2, sigma1*, sigma2*) in standard-deviation units.
struct LimitParams {
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double sigma1_star = 1.0;
    double sigma2_star = 1.0;
};

LimitParams limit_params(const NuisanceEstimates& nuis);

struct McSettings {
    double grid_radius = 200.0; // R
    double step = 0.05;         // delta
    int paths = 50000;          // M
    std::uint64_t seed = 1;
};

// Empirical quantile function of argmax_r Z(r) where
//   Z(r) = 2 W1(-r) + r                                   for r < 0,
//   Z(0) = 0,
//   Z(r) = (2 s2*/s1*) W2(r) - (s2^2/s1^2) r               for r > 0,
// with W1, W2 independent standard Brownian motions.
struct QuantileTable {
    LimitParams params;
    McSettings mc;
    std::vector<double> probs;  // sorted, covers the default set
    std::vector<double> quants; // argmax locations, r units
    double truncation_fraction = 0.0;
    bool truncation_warning = false;

    // Exact prob lookup (1e-9 tolerance); missing entries are an error.
    double quantile(double prob) const;
};

// Probabilities every table carries: the tails needed for 70..99% intervals.
std::vector<double> default_probs();

// Simulates `paths` grid walks of Z on {-R,...,0,...,R} with per-step
// variance delta, records each path's argmax (ties to the smallest |r|,
// then the negative side), and returns empirical quantiles at
// union(probs, default_probs()). Paths whose argmax lands on the grid edge
// are counted; a fraction above 1% sets truncation_warning.
QuantileTable simulate_argmax_quantiles(const LimitParams& params,
                                        const McSettings& mc,
                                        std::span<const double> probs = {},
                                        Execution exec = Execution::parallel);

struct ConfidenceInterval {
    double level = 0.0;
    int lower = 0; // 1-based index
    int upper = 0;
    double scale_c = 0.0; // index units per r unit
};

// [floor(k - c q_{(1+level)/2}), ceil(k - c q_{(1-level)/2})] clipped to
// [1, T], with c = sigma1*^2 / (sigma1^4 xi2^2).
ConfidenceInterval confidence_interval(int k_tilde, int T,
                                       const NuisanceEstimates& nuis,
                                       const QuantileTable& table,
                                       double level);

} // namespace cpd
