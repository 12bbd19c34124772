#include "cpd/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "cpd/errors.hpp"

namespace cpd {

namespace {

// trace(A B^{-1}) for symmetric positive definite B via Gaussian
// elimination, used by the degrees-of-freedom correction below.
double trace_a_binv(const std::vector<std::vector<double>>& a,
                    std::vector<std::vector<double>> b) {
    const int n = static_cast<int>(a.size());
    std::vector<std::vector<double>> rhs(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        rhs[i][i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(b[r][col]) > std::abs(b[pivot][col]))
                pivot = r;
        if (b[pivot][col] == 0.0)
            return 0.0; // singular: skip the correction
        std::swap(b[col], b[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (int r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const double f = b[r][col] / b[col][col];
            for (int c = 0; c < n; ++c) {
                b[r][c] -= f * b[col][c];
                rhs[r][c] -= f * rhs[col][c];
            }
        }
    }
    double tr = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            tr += a[i][k] * rhs[k][i] / b[k][k];
    return tr;
}

std::vector<std::vector<double>> toeplitz(const std::vector<double>& gamma,
                                          int p) {
    std::vector<std::vector<double>> m(p, std::vector<double>(p));
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            m[i][j] = gamma[std::abs(i - j)];
    return m;
}

} // namespace

NuisanceEstimates nuisance_estimates(const TimeSeries& x, int k_tilde,
                                     const ArModel& model_pre,
                                     const ArModel& model_post, int p_common,
                                     NoiseInteraction form) {
    const int T = x.length();
    const int p = p_common;
    if (model_pre.order() != p || model_post.order() != p)
        fail(Errc::invalid_input, "models must be padded to the common order");

    std::vector<double> eta(p);
    double xi2_sq = 0.0;
    for (int j = 0; j < p; ++j) {
        eta[j] = model_pre.phi[j] - model_post.phi[j];
        xi2_sq += eta[j] * eta[j];
    }
    NuisanceEstimates out;
    out.xi2 = std::sqrt(xi2_sq);
    if (!(out.xi2 > 0.0))
        fail(Errc::no_jump, "pre- and post-change coefficients coincide");
    if (k_tilde < p + 2 || T - k_tilde < p + 2)
        fail(Errc::invalid_input, "both segments need at least p + 2 points");

    std::span<const double> v = x.view();

    struct SegmentStats {
        int n = 0;
        double mean_u2 = 0.0;  // mean (eta' Z_t)^2, unnormalized signal
        double resid_var = 0.0;
        double star_sq = 0.0;  // before the xi2^-2 normalization
    };

    // per-segment sums over fully in-segment lag windows
    auto segment_stats = [&](int a, int b, const ArModel& model) {
        SegmentStats st;
        const int n = b - (a + p);
        st.n = n;
        std::vector<double> u_vec(n), e_vec(n);
        double su2 = 0.0, se2 = 0.0, seu = 0.0;
        for (int t = a + p; t < b; ++t) {
            double u = 0.0;
            double pred = 0.0;
            for (int j = 1; j <= p; ++j) {
                u += eta[j - 1] * v[t - j];
                pred += model.phi[j - 1] * v[t - j];
            }
            const double e = v[t] - pred;
            u_vec[t - a - p] = u;
            e_vec[t - a - p] = e;
            su2 += u * u;
            se2 += e * e;
            seu += e * e * u * u;
        }
        st.mean_u2 = su2 / n;
        st.resid_var = se2 / n;
        switch (form) {
        case NoiseInteraction::robust:
            st.star_sq = seu / n;
            break;
        case NoiseInteraction::factorized:
            st.star_sq = st.resid_var * st.mean_u2;
            break;
        case NoiseInteraction::long_run: {
            // loss increment when one observation switches models:
            // D_t = (e_t + u_t)^2 - e_t^2 = 2 e_t u_t + u_t^2. Its partial
            // sums drive the limiting walk, so the diffusion parameter is
            // the long-run variance of D_t / 2 (Bartlett weights). The
            // martingale term alone is what the small-jump limit keeps;
            // at finite jump sizes the quartic term and its serial
            // correlation are not negligible.
            std::vector<double> d(n);
            double mean_d = 0.0;
            for (int i = 0; i < n; ++i) {
                d[i] = 2.0 * e_vec[i] * u_vec[i] + u_vec[i] * u_vec[i];
                mean_d += d[i];
            }
            mean_d /= n;
            for (double& di : d)
                di -= mean_d;
            const int bandwidth = std::min(
                n - 1, static_cast<int>(1.5 * std::cbrt(static_cast<double>(n))));
            double lrv = 0.0;
            for (int i = 0; i < n; ++i)
                lrv += d[i] * d[i];
            for (int h = 1; h <= bandwidth; ++h) {
                double acc = 0.0;
                for (int i = 0; i + h < n; ++i)
                    acc += d[i] * d[i + h];
                lrv += 2.0 * (1.0 - static_cast<double>(h) / (bandwidth + 1)) * acc;
            }
            lrv /= n;
            st.star_sq = 0.25 * lrv;
            break;
        }
        }
        return st;
    };

    SegmentStats pre = segment_stats(0, k_tilde, model_pre);
    SegmentStats post = segment_stats(k_tilde, T, model_post);

    double signal_pre = pre.mean_u2;
    double signal_post = post.mean_u2;
    if (form == NoiseInteraction::long_run) {
        // mean (eta_hat' Z)^2 overshoots eta' Sigma_Z eta by the sampling
        // noise of the fitted coefficients: tr(Sigma_Z Cov(eta_hat)) with
        // Cov(phi_hat_j) ~ resid_var_j Gamma_j^{-1} / n_j. The scale factor
        // carries the signal to the fourth power, so subtract the bias.
        const auto acv_pre =
            sample_autocovariance(v.subspan(0, k_tilde), std::max(p - 1, 0));
        const auto acv_post =
            sample_autocovariance(v.subspan(k_tilde), std::max(p - 1, 0));
        const auto g_pre = toeplitz(acv_pre.gamma, p);
        const auto g_post = toeplitz(acv_post.gamma, p);
        const double cross_pre = trace_a_binv(g_pre, g_post);
        const double cross_post = trace_a_binv(g_post, g_pre);
        const double bias_pre = p * pre.resid_var / pre.n +
                                cross_pre * post.resid_var / post.n;
        const double bias_post = p * post.resid_var / post.n +
                                 cross_post * pre.resid_var / pre.n;
        signal_pre = std::max(signal_pre - bias_pre, 0.5 * signal_pre);
        signal_post = std::max(signal_post - bias_post, 0.5 * signal_post);
    }

    out.sigma1_sq = signal_pre / xi2_sq;
    out.sigma2_sq = signal_post / xi2_sq;
    out.sigma1_star_sq = pre.star_sq / xi2_sq;
    out.sigma2_star_sq = post.star_sq / xi2_sq;
    out.resid_var_pre = pre.resid_var;
    out.resid_var_post = post.resid_var;
    return out;
}

LimitParams limit_params(const NuisanceEstimates& nuis) {
    return LimitParams{std::sqrt(nuis.sigma1_sq), std::sqrt(nuis.sigma2_sq),
                       std::sqrt(nuis.sigma1_star_sq),
                       std::sqrt(nuis.sigma2_star_sq)};
}

std::vector<double> default_probs() {
    return {0.005, 0.025, 0.05, 0.10, 0.15, 0.85, 0.90, 0.95, 0.975, 0.995};
}

namespace {

// One side of Z, scanned outward from 0: increments sd * g - drift * delta.
// Returns the side's running max and its location (in steps; smallest on
// ties). Scanning stops once the max cannot be beaten anymore: the future
// sup of a drift -mu, diffusion sd walk exceeds a gap G with probability
// exp(-2 mu G / sd^2), so a gap of 15 sd^2 / mu leaves ~1e-13 per scan.
struct SideMax {
    double value = 0.0;
    int step = 0; // 0 = origin
};

SideMax scan_side(std::mt19937_64& rng, std::normal_distribution<double>& gauss,
                  int steps, double step_sd, double step_drift,
                  double stop_gap) {
    SideMax best;
    double z = 0.0;
    for (int i = 1; i <= steps; ++i) {
        z += step_sd * gauss(rng) - step_drift;
        if (z > best.value) {
            best.value = z;
            best.step = i;
        } else if (best.value - z > stop_gap) {
            break;
        }
    }
    return best;
}

} // namespace

QuantileTable simulate_argmax_quantiles(const LimitParams& params,
                                        const McSettings& mc,
                                        std::span<const double> probs,
                                        Execution exec) {
    if (!(params.sigma1 > 0.0) || !(params.sigma2 > 0.0) ||
        !(params.sigma1_star > 0.0) || !(params.sigma2_star > 0.0))
        fail(Errc::invalid_params, "all limit parameters must be positive");
    if (!(mc.grid_radius > 0.0))
        fail(Errc::invalid_params, "grid radius must be positive");
    if (!(mc.step > 0.0) || mc.step > mc.grid_radius / 100.0)
        fail(Errc::invalid_params, "need 0 < step <= radius/100");
    if (mc.paths < 1000)
        fail(Errc::invalid_params, "need at least 1000 paths");

    std::vector<double> all_probs = default_probs();
    all_probs.insert(all_probs.end(), probs.begin(), probs.end());
    std::sort(all_probs.begin(), all_probs.end());
    all_probs.erase(std::unique(all_probs.begin(), all_probs.end(),
                                [](double a, double b) {
                                    return std::abs(a - b) < 1e-12;
                                }),
                    all_probs.end());
    for (double pr : all_probs)
        if (!(pr > 0.0 && pr < 1.0))
            fail(Errc::invalid_params, "probabilities must lie in (0,1)");

    const int steps = static_cast<int>(std::llround(mc.grid_radius / mc.step));
    const double delta = mc.step;
    const double sqrt_delta = std::sqrt(delta);

    // negative side: Z(-s) = 2 W1(s) - s
    const double neg_sd = 2.0 * sqrt_delta;
    const double neg_drift = delta;
    const double neg_gap = 15.0 * 4.0 / 1.0;
    // positive side: Z(s) = (2 s2*/s1*) W2(s) - (s2^2/s1^2) s
    const double diff_ratio = 2.0 * params.sigma2_star / params.sigma1_star;
    const double drift_ratio =
        (params.sigma2 * params.sigma2) / (params.sigma1 * params.sigma1);
    const double pos_sd = diff_ratio * sqrt_delta;
    const double pos_drift = drift_ratio * delta;
    const double pos_gap = 15.0 * diff_ratio * diff_ratio / drift_ratio;

    std::vector<double> argmax(mc.paths);
    std::vector<unsigned char> truncated(mc.paths, 0);

    auto run_path = [&](int i) {
        std::mt19937_64 rng(derive_seed(mc.seed, static_cast<std::uint64_t>(i)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const SideMax neg =
            scan_side(rng, gauss, steps, neg_sd, neg_drift, neg_gap);
        const SideMax pos =
            scan_side(rng, gauss, steps, pos_sd, pos_drift, pos_gap);
        // argmax over {origin, negative side, positive side}; strict
        // comparisons keep ties at the smallest |r| and prefer r <= 0
        double best_v = 0.0;
        double best_r = 0.0;
        if (neg.value > best_v) {
            best_v = neg.value;
            best_r = -neg.step * delta;
        }
        if (pos.value > best_v) {
            best_v = pos.value;
            best_r = pos.step * delta;
        }
        argmax[i] = best_r;
        truncated[i] = std::abs(best_r) >= (steps - 0.5) * delta ? 1 : 0;
    };

    if (exec == Execution::serial) {
        for (int i = 0; i < mc.paths; ++i)
            run_path(i);
    } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_cap())
#endif
        for (int i = 0; i < mc.paths; ++i)
            run_path(i);
    }

    int trunc_count = 0;
    for (unsigned char t : truncated)
        trunc_count += t;

    std::vector<double> sorted = argmax;
    std::sort(sorted.begin(), sorted.end());

    QuantileTable table;
    table.params = params;
    table.mc = mc;
    table.probs = all_probs;
    table.quants.reserve(all_probs.size());
    for (double pr : all_probs) {
        const double h = pr * (mc.paths - 1);
        const std::size_t lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        table.quants.push_back(sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]));
    }
    table.truncation_fraction = static_cast<double>(trunc_count) / mc.paths;
    table.truncation_warning = table.truncation_fraction > 0.01;
    return table;
}

double QuantileTable::quantile(double prob) const {
    for (std::size_t i = 0; i < probs.size(); ++i)
        if (std::abs(probs[i] - prob) < 1e-9)
            return quants[i];
    fail(Errc::table_incomplete,
         "no quantile stored for probability " + std::to_string(prob));
}

ConfidenceInterval confidence_interval(int k_tilde, int T,
                                       const NuisanceEstimates& nuis,
                                       const QuantileTable& table,
                                       double level) {
    if (!(level > 0.0 && level < 1.0))
        fail(Errc::invalid_params, "level must lie in (0,1)");
    if (!(nuis.xi2 > 0.0))
        fail(Errc::no_jump, "zero jump size");
    const LimitParams expect = limit_params(nuis);
    auto close = [](double a, double b) {
        return std::abs(a - b) <= 1e-9 * std::max({std::abs(a), std::abs(b), 1.0});
    };
    if (!close(expect.sigma1, table.params.sigma1) ||
        !close(expect.sigma2, table.params.sigma2) ||
        !close(expect.sigma1_star, table.params.sigma1_star) ||
        !close(expect.sigma2_star, table.params.sigma2_star))
        fail(Errc::invalid_params,
             "quantile table was built for different limit parameters");

    const double q_hi = table.quantile((1.0 + level) / 2.0);
    const double q_lo = table.quantile((1.0 - level) / 2.0);
    const double c =
        nuis.sigma1_star_sq / (nuis.sigma1_sq * nuis.sigma1_sq * nuis.xi2 * nuis.xi2);

    ConfidenceInterval ci;
    ci.level = level;
    ci.scale_c = c;
    ci.lower = static_cast<int>(std::floor(k_tilde - c * q_hi));
    ci.upper = static_cast<int>(std::ceil(k_tilde - c * q_lo));
    ci.lower = std::clamp(ci.lower, 1, T);
    ci.upper = std::clamp(ci.upper, 1, T);
    if (ci.lower > k_tilde)
        ci.lower = k_tilde;
    if (ci.upper < k_tilde)
        ci.upper = k_tilde;
    return ci;
}

} // namespace cpd
