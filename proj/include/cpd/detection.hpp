#pragma once

#include <span>
#include <vector>

#include "cpd/parallel.hpp"
#include "cpd/time_series.hpp"
#include "cpd/ts_core.hpp"

namespace cpd {

// How segment AR orders are chosen: a fixed order, or AIC up to p_max.
// p_max = -1 means the default cap for the segment length.
struct LagMode {
    enum class Kind { fixed, aic };
    Kind kind = Kind::aic;
    int value = -1;

    static LagMode fixed(int p) { return {Kind::fixed, p}; }
    static LagMode aic(int p_max = -1) { return {Kind::aic, p_max}; }
};

struct DetectionConfig {
    LagMode lag_mode{};
    int min_segment = 0;   // 0 = auto: max(2 * order cap, 20)
    int sweep_stride = 1;  // > 1 enables a coarse pass + local refinement
    bool demean = false;   // subtract the global mean before everything else
    bool refit_lags = true; // re-select AIC lags at k_hat before stage 2
    Execution exec = Execution::parallel;
};

struct LossPoint {
    int k = 0;
    double loss = 0.0;
};

// Output of the two-stage procedure. Indices k are 1-based counts of
// pre-change observations, matching floor(T tau).
struct DetectionResult {
    int k_hat = 0;   // stage-1 sweep argmin
    int k_tilde = 0; // stage-2 refitted least-squares argmin
    ArModel model_pre;  // refit at k_hat, zero-padded to p_common
    ArModel model_post; // refit at k_hat, zero-padded to p_common
    int p_common = 0;
    std::vector<LossPoint> loss_curve_stage1;
    std::vector<LossPoint> loss_curve_stage2;
};

struct Stage1Eval {
    double loss = 0.0;
    ArModel model_pre;
    ArModel model_post;
};

struct RefitResult {
    ArModel model_pre;
    ArModel model_post;
    int p_common = 0;
};

// Split losses for one candidate k: fit AR models on [1,k] and (k,T] and sum
// the squared one-step-ahead errors, each segment skipping its first p
// regression targets. Reference implementation; the sweep uses prefix
// statistics instead.
Stage1Eval stage1_loss(const TimeSeries& x, int k, const DetectionConfig& config);

// Sweep of stage1_loss over {min_segment, +stride, ..., T-min_segment};
// smallest k wins ties. Fills the stage-1 fields of the result.
DetectionResult near_optimal_estimate(const TimeSeries& x,
                                      const DetectionConfig& config);

// Refit each side of the split at k, pad both coefficient vectors to the
// common order max(p1, p2).
RefitResult refit_models(const TimeSeries& x, int k,
                         const DetectionConfig& config);

// Q(k) for k in {p+1, ..., T-1} with the coefficients frozen: cumulative
// squared-residual difference in one O(T p) pass.
std::vector<LossPoint> stage2_loss_curve(std::span<const double> x,
                                         const ArModel& model_pre,
                                         const ArModel& model_post,
                                         int p_common);

// argmin of stage2_loss_curve; smallest k wins ties.
int optimal_estimate(std::span<const double> x, const ArModel& model_pre,
                     const ArModel& model_post, int p_common);

// Full pipeline: near_optimal_estimate -> refit at k_hat -> optimal_estimate.
DetectionResult detect(const TimeSeries& x, const DetectionConfig& config);

namespace detail {

// Running prefix sums over the series: sum[i] = sum of x_t for t < i and
// cross[d][i] = sum of x_s x_{s+d} for s < i. After the O(T * max_lag)
// build, any segment's autocovariances cost O(p) and any segment's
// regression SSE costs O(p^2).
struct PrefixStats {
    int T = 0;
    int max_lag = 0;
    std::vector<double> sum;
    std::vector<std::vector<double>> cross;

    static PrefixStats build(std::span<const double> x, int max_lag);

    double range_sum(int a, int b) const { return sum[b] - sum[a]; }
    double cross_sum(int d, int a, int b) const {
        return cross[d][b] - cross[d][a];
    }

    // Demeaned autocovariances of [a, b).
    AutocovarianceVector segment_acv(int a, int b, int p) const;

    // sum_{t = a+p}^{b-1} (x_t - phi' (x_{t-1},...,x_{t-p}))^2 on raw values.
    double segment_sse(int a, int b, std::span<const double> phi) const;
};

// Segment AR orders used across the stage-1 sweep: fixed orders, or AIC on
// the two halves of the series.
std::pair<int, int> sweep_lags(const TimeSeries& x,
                               const DetectionConfig& config);

// Order cap implied by the config for a series of length T (drives the
// automatic min_segment).
int order_cap(const DetectionConfig& config, int T);

int resolve_min_segment(const DetectionConfig& config, int T);

// Losses for every candidate; +inf marks candidates whose segments could
// not be fitted. Parallel and serial execution give identical results.
std::vector<double> sweep_losses(const PrefixStats& stats,
                                 std::span<const int> candidates, int p1,
                                 int p2, Execution exec);

} // namespace detail

} // namespace cpd
