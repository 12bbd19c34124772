#include "cpd/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cpd/errors.hpp"

namespace cpd {

namespace detail {

PrefixStats PrefixStats::build(std::span<const double> x, int max_lag) {
    PrefixStats st;
    st.T = static_cast<int>(x.size());
    st.max_lag = max_lag;
    st.sum.resize(st.T + 1, 0.0);
    for (int t = 0; t < st.T; ++t)
        st.sum[t + 1] = st.sum[t] + x[t];
    st.cross.resize(max_lag + 1);
    for (int d = 0; d <= max_lag; ++d) {
        auto& c = st.cross[d];
        c.resize(st.T + 1 - d, 0.0);
        for (int s = 0; s + d < st.T; ++s)
            c[s + 1] = c[s] + x[s] * x[s + d];
    }
    return st;
}

AutocovarianceVector PrefixStats::segment_acv(int a, int b, int p) const {
    const int n = b - a;
    if (n < p + 2)
        fail(Errc::order_too_large, "segment too short for requested lag");
    const double mean = range_sum(a, b) / n;
    AutocovarianceVector acv;
    acv.segment_len = n;
    acv.gamma.resize(p + 1);
    for (int j = 0; j <= p; ++j) {
        const double prod = cross_sum(j, a, b - j);
        const double left = range_sum(a, b - j);
        const double right = range_sum(a + j, b);
        acv.gamma[j] =
            (prod - mean * (left + right) + (n - j) * mean * mean) / n;
    }
    return acv;
}

double PrefixStats::segment_sse(int a, int b,
                                std::span<const double> phi) const {
    const int p = static_cast<int>(phi.size());
    double sse = cross_sum(0, a + p, b);
    for (int j = 1; j <= p; ++j)
        sse -= 2.0 * phi[j - 1] * cross_sum(j, a + p - j, b - j);
    for (int j = 1; j <= p; ++j) {
        for (int l = j; l <= p; ++l) {
            const double w = (j == l) ? 1.0 : 2.0;
            sse += w * phi[j - 1] * phi[l - 1] *
                   cross_sum(l - j, a + p - l, b - l);
        }
    }
    return sse;
}

int order_cap(const DetectionConfig& config, int T) {
    if (config.lag_mode.kind == LagMode::Kind::fixed)
        return config.lag_mode.value;
    if (config.lag_mode.value >= 0)
        return config.lag_mode.value;
    return default_max_lag(T / 2);
}

int resolve_min_segment(const DetectionConfig& config, int T) {
    if (config.min_segment > 0)
        return config.min_segment;
    return std::max(2 * order_cap(config, T), 20);
}

std::pair<int, int> sweep_lags(const TimeSeries& x,
                               const DetectionConfig& config) {
    if (config.lag_mode.kind == LagMode::Kind::fixed) {
        if (config.lag_mode.value < 0)
            fail(Errc::invalid_input, "fixed lag must be >= 0");
        return {config.lag_mode.value, config.lag_mode.value};
    }
    const int T = x.length();
    const int half = T / 2;
    auto cap_for = [&](int n) {
        int cap = config.lag_mode.value >= 0 ? config.lag_mode.value
                                             : default_max_lag(n);
        return std::min(cap, n - 2);
    };
    std::span<const double> v = x.view();
    const int p1 = select_lag_aic(v.subspan(0, half), cap_for(half));
    const int p2 = select_lag_aic(v.subspan(half), cap_for(T - half));
    return {p1, p2};
}

namespace {

// Loss of one candidate split from the shared prefix statistics. Throws if
// a segment cannot carry an AR fit.
double candidate_loss(const PrefixStats& stats, int k, int p1, int p2) {
    const ArModel pre = yule_walker(stats.segment_acv(0, k, p1), p1);
    const ArModel post = yule_walker(stats.segment_acv(k, stats.T, p2), p2);
    return stats.segment_sse(0, k, pre.phi) +
           stats.segment_sse(k, stats.T, post.phi);
}

} // namespace

std::vector<double> sweep_losses(const PrefixStats& stats,
                                 std::span<const int> candidates, int p1,
                                 int p2, Execution exec) {
    const int m = static_cast<int>(candidates.size());
    std::vector<double> losses(m, std::numeric_limits<double>::infinity());
    auto eval = [&](int i) {
        try {
            losses[i] = candidate_loss(stats, candidates[i], p1, p2);
        } catch (const Error&) {
            // degenerate segment at this split; leave +inf
        }
    };
    if (exec == Execution::serial) {
        for (int i = 0; i < m; ++i)
            eval(i);
    } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_cap())
#endif
        for (int i = 0; i < m; ++i)
            eval(i);
    }
    return losses;
}

} // namespace detail

namespace {

const TimeSeries& maybe_demean(const TimeSeries& x,
                               const DetectionConfig& config,
                               TimeSeries& storage) {
    if (config.demean && !x.demeaned) {
        storage = demeaned_copy(x);
        return storage;
    }
    return x;
}

ArModel fit_segment(std::span<const double> seg, int p) {
    return yule_walker(sample_autocovariance(seg, p), p);
}

double segment_sse_direct(std::span<const double> x, const ArModel& model,
                          int a, int b) {
    const int p = model.order();
    std::vector<double> res = residuals(x, model, IndexRange{a + p, b});
    double sse = 0.0;
    for (double r : res)
        sse += r * r;
    return sse;
}

std::pair<int, int> segment_lags(const TimeSeries& x, int k,
                                 const DetectionConfig& config) {
    if (config.lag_mode.kind == LagMode::Kind::fixed)
        return {config.lag_mode.value, config.lag_mode.value};
    if (!config.refit_lags)
        return detail::sweep_lags(x, config);
    const int T = x.length();
    auto cap_for = [&](int n) {
        int cap = config.lag_mode.value >= 0 ? config.lag_mode.value
                                             : default_max_lag(n);
        return std::min(cap, n - 2);
    };
    std::span<const double> v = x.view();
    const int p1 = select_lag_aic(v.subspan(0, k), cap_for(k));
    const int p2 = select_lag_aic(v.subspan(k), cap_for(T - k));
    return {p1, p2};
}

std::vector<int> candidate_grid(int min_segment, int T, int stride) {
    std::vector<int> ks;
    for (int k = min_segment; k <= T - min_segment; k += stride)
        ks.push_back(k);
    return ks;
}

} // namespace

Stage1Eval stage1_loss(const TimeSeries& x_in, int k,
                       const DetectionConfig& config) {
    TimeSeries storage;
    const TimeSeries& x = maybe_demean(x_in, config, storage);
    const int T = x.length();
    const int min_seg = detail::resolve_min_segment(config, T);
    if (k < min_seg || k > T - min_seg)
        fail(Errc::invalid_input,
             "candidate " + std::to_string(k) + " outside [" +
                 std::to_string(min_seg) + ", " + std::to_string(T - min_seg) +
                 "]");
    auto [p1, p2] = detail::sweep_lags(x, config);
    std::span<const double> v = x.view();
    Stage1Eval out;
    try {
        out.model_pre = fit_segment(v.subspan(0, k), p1);
        out.model_post = fit_segment(v.subspan(k), p2);
    } catch (const Error& e) {
        if (e.code() == Errc::degenerate_series)
            fail(Errc::degenerate_segment, e.what());
        throw;
    }
    out.loss = segment_sse_direct(v, out.model_pre, 0, k);
    // post-change regression restarts at k: the first p2 post points carry
    // pre-change lags and are dropped from the sum
    std::vector<double> post(v.begin() + k, v.end());
    out.loss += segment_sse_direct(post, out.model_post, 0, T - k);
    return out;
}

DetectionResult near_optimal_estimate(const TimeSeries& x_in,
                                      const DetectionConfig& config) {
    TimeSeries storage;
    const TimeSeries& x = maybe_demean(x_in, config, storage);
    const int T = x.length();
    const int min_seg = detail::resolve_min_segment(config, T);
    if (config.sweep_stride < 1)
        fail(Errc::invalid_input, "sweep_stride must be >= 1");
    if (T < 2 * min_seg)
        fail(Errc::series_too_short,
             "need T >= " + std::to_string(2 * min_seg) + ", got " +
                 std::to_string(T));

    auto [p1, p2] = detail::sweep_lags(x, config);
    const auto stats = detail::PrefixStats::build(x.view(), std::max(p1, p2));

    std::vector<int> ks = candidate_grid(min_seg, T, config.sweep_stride);
    std::vector<double> losses =
        detail::sweep_losses(stats, ks, p1, p2, config.exec);

    if (config.sweep_stride > 1) {
        // coarse pass located the valley; rescan it at stride 1
        int coarse_best = -1;
        for (int i = 0; i < static_cast<int>(ks.size()); ++i)
            if (coarse_best < 0 || losses[i] < losses[coarse_best])
                coarse_best = i;
        if (coarse_best >= 0 &&
            std::isfinite(losses[coarse_best])) {
            const int center = ks[coarse_best];
            const int lo = std::max(min_seg, center - 2 * config.sweep_stride);
            const int hi =
                std::min(T - min_seg, center + 2 * config.sweep_stride);
            std::vector<int> fine;
            for (int k = lo; k <= hi; ++k)
                fine.push_back(k);
            std::vector<double> fine_losses =
                detail::sweep_losses(stats, fine, p1, p2, config.exec);
            for (std::size_t i = 0; i < fine.size(); ++i) {
                ks.push_back(fine[i]);
                losses.push_back(fine_losses[i]);
            }
            // keep the curve sorted and unique on k
            std::vector<std::size_t> order(ks.size());
            for (std::size_t i = 0; i < order.size(); ++i)
                order[i] = i;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return ks[a] < ks[b];
            });
            std::vector<int> ks2;
            std::vector<double> losses2;
            for (std::size_t idx : order) {
                if (!ks2.empty() && ks2.back() == ks[idx])
                    continue;
                ks2.push_back(ks[idx]);
                losses2.push_back(losses[idx]);
            }
            ks = std::move(ks2);
            losses = std::move(losses2);
        }
    }

    int best = -1;
    for (int i = 0; i < static_cast<int>(ks.size()); ++i) {
        if (!std::isfinite(losses[i]))
            continue;
        if (best < 0 || losses[i] < losses[best])
            best = i;
    }
    if (best < 0)
        fail(Errc::degenerate_segment, "no candidate split could be fitted");

    DetectionResult result;
    result.k_hat = ks[best];
    result.loss_curve_stage1.reserve(ks.size());
    for (std::size_t i = 0; i < ks.size(); ++i)
        if (std::isfinite(losses[i]))
            result.loss_curve_stage1.push_back({ks[i], losses[i]});

    // slice-based refit at k_hat for the reported stage-1 models
    DetectionConfig fit_cfg = config;
    fit_cfg.demean = false;
    Stage1Eval at_best = stage1_loss(x, result.k_hat, fit_cfg);
    result.model_pre = std::move(at_best.model_pre);
    result.model_post = std::move(at_best.model_post);
    result.p_common =
        std::max(result.model_pre.order(), result.model_post.order());
    return result;
}

RefitResult refit_models(const TimeSeries& x_in, int k,
                         const DetectionConfig& config) {
    TimeSeries storage;
    const TimeSeries& x = maybe_demean(x_in, config, storage);
    const int T = x.length();
    const int min_seg = detail::resolve_min_segment(config, T);
    if (k < min_seg || k > T - min_seg)
        fail(Errc::invalid_input, "refit point outside admissible range");
    auto [p1, p2] = segment_lags(x, k, config);
    std::span<const double> v = x.view();
    RefitResult out;
    try {
        out.model_pre = fit_segment(v.subspan(0, k), p1);
        out.model_post = fit_segment(v.subspan(k), p2);
    } catch (const Error& e) {
        if (e.code() == Errc::degenerate_series)
            fail(Errc::degenerate_segment, e.what());
        throw;
    }
    out.p_common = std::max(p1, p2);
    out.model_pre.phi.resize(out.p_common, 0.0);
    out.model_post.phi.resize(out.p_common, 0.0);
    return out;
}

std::vector<LossPoint> stage2_loss_curve(std::span<const double> x,
                                         const ArModel& model_pre,
                                         const ArModel& model_post,
                                         int p_common) {
    const int T = static_cast<int>(x.size());
    const int p = p_common;
    if (model_pre.order() != p || model_post.order() != p)
        fail(Errc::invalid_input, "models must be padded to the common order");
    if (T < p + 2)
        fail(Errc::series_too_short, "need T >= p + 2");

    const std::vector<double> r1 = residuals(x, model_pre, {p, T});
    const std::vector<double> r2 = residuals(x, model_post, {p, T});

    double total_post = 0.0;
    for (double r : r2)
        total_post += r * r;

    const double norm = 1.0 / (T - p + 1);
    std::vector<LossPoint> curve;
    curve.reserve(T - 1 - p);
    // Q(k) = [sum_{t=p+1}^{k} r1_t^2 + sum_{t=k+1}^{T} r2_t^2] / (T-p+1),
    // 1-based t. Kept as a running difference so identical models give an
    // exactly flat curve.
    double diff = 0.0;
    for (int k = p + 1; k <= T - 1; ++k) {
        const int idx = k - 1 - p; // 0-based position of observation k
        diff += r1[idx] * r1[idx] - r2[idx] * r2[idx];
        curve.push_back({k, (total_post + diff) * norm});
    }
    return curve;
}

int optimal_estimate(std::span<const double> x, const ArModel& model_pre,
                     const ArModel& model_post, int p_common) {
    const std::vector<LossPoint> curve =
        stage2_loss_curve(x, model_pre, model_post, p_common);
    int best = 0;
    for (int i = 1; i < static_cast<int>(curve.size()); ++i)
        if (curve[i].loss < curve[best].loss)
            best = i;
    return curve[best].k;
}

DetectionResult detect(const TimeSeries& x_in, const DetectionConfig& config) {
    TimeSeries storage;
    const TimeSeries& x = maybe_demean(x_in, config, storage);
    DetectionConfig cfg = config;
    cfg.demean = false;

    DetectionResult result = near_optimal_estimate(x, cfg);
    RefitResult refit = refit_models(x, result.k_hat, cfg);
    result.model_pre = std::move(refit.model_pre);
    result.model_post = std::move(refit.model_post);
    result.p_common = refit.p_common;
    result.loss_curve_stage2 = stage2_loss_curve(
        x.view(), result.model_pre, result.model_post, result.p_common);
    int best = 0;
    for (int i = 1; i < static_cast<int>(result.loss_curve_stage2.size()); ++i)
        if (result.loss_curve_stage2[i].loss <
            result.loss_curve_stage2[best].loss)
            best = i;
    result.k_tilde = result.loss_curve_stage2[best].k;
    return result;
}

} // namespace cpd
