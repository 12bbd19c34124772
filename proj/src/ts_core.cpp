#include "cpd/ts_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "cpd/errors.hpp"

namespace cpd {

int default_max_lag(int n) {
    if (n < 2)
        return 0;
    int cap = static_cast<int>(std::floor(10.0 * std::log10(static_cast<double>(n))));
    cap = std::min(cap, n / 10);
    cap = std::min(cap, n - 2);
    return std::max(cap, 0);
}

AutocovarianceVector sample_autocovariance(std::span<const double> segment,
                                           int max_lag) {
    const int n = static_cast<int>(segment.size());
    if (max_lag < 0)
        fail(Errc::invalid_input, "max_lag must be >= 0");
    if (n < max_lag + 2)
        fail(Errc::order_too_large,
             "segment of length " + std::to_string(n) +
                 " cannot support lag " + std::to_string(max_lag));
    double mean = 0.0;
    for (double v : segment) {
        if (!std::isfinite(v))
            fail(Errc::invalid_input, "non-finite value in segment");
        mean += v;
    }
    mean /= n;

    AutocovarianceVector acv;
    acv.segment_len = n;
    acv.gamma.resize(max_lag + 1, 0.0);
    for (int k = 0; k <= max_lag; ++k) {
        double s = 0.0;
        for (int t = 0; t + k < n; ++t)
            s += (segment[t] - mean) * (segment[t + k] - mean);
        acv.gamma[k] = s / n;
    }
    return acv;
}

namespace {

struct LevinsonState {
    std::vector<double> phi;       // coefficients at the completed order
    std::vector<double> sigma2;    // sigma2[m] for m = 0..completed
    int completed = 0;
};

// One Levinson-Durbin pass up to order p. Stops before an order whose
// reflection coefficient leaves (-1, 1) or whose innovation variance is no
// longer positive.
LevinsonState levinson(std::span<const double> gamma, int p) {
    LevinsonState st;
    st.sigma2.reserve(p + 1);
    st.sigma2.push_back(gamma[0]);
    st.phi.assign(p, 0.0);
    std::vector<double> prev(p, 0.0);
    double err = gamma[0];
    for (int m = 1; m <= p; ++m) {
        double acc = gamma[m];
        for (int j = 1; j < m; ++j)
            acc -= prev[j - 1] * gamma[m - j];
        const double kappa = acc / err;
        if (!std::isfinite(kappa) || std::abs(kappa) >= 1.0)
            break;
        st.phi[m - 1] = kappa;
        for (int j = 1; j < m; ++j)
            st.phi[j - 1] = prev[j - 1] - kappa * prev[m - 1 - j];
        err *= (1.0 - kappa * kappa);
        if (!(err > 0.0))
            break;
        std::copy(st.phi.begin(), st.phi.begin() + m, prev.begin());
        st.sigma2.push_back(err);
        st.completed = m;
    }
    st.phi.assign(prev.begin(), prev.begin() + st.completed);
    return st;
}

} // namespace

ArModel yule_walker(const AutocovarianceVector& acv, int p) {
    if (p < 0)
        fail(Errc::invalid_input, "order must be >= 0");
    if (acv.max_lag() < p)
        fail(Errc::order_too_large, "autocovariances carry lags 0.." +
                                        std::to_string(acv.max_lag()) +
                                        ", need " + std::to_string(p));
    if (!(acv.gamma[0] > 0.0))
        fail(Errc::degenerate_series, "gamma_0 must be positive");
    if (p == 0)
        return ArModel{{}, acv.gamma[0]};

    LevinsonState st = levinson(acv.gamma, p);
    if (st.completed < p)
        fail(Errc::singular_system,
             "Levinson recursion broke down at order " +
                 std::to_string(st.completed + 1));
    return ArModel{std::move(st.phi), st.sigma2[p]};
}

std::vector<double> innovation_variances(const AutocovarianceVector& acv,
                                         int p_max) {
    if (p_max < 0)
        fail(Errc::invalid_input, "p_max must be >= 0");
    if (acv.max_lag() < p_max)
        fail(Errc::order_too_large, "autocovariances too short for p_max");
    if (!(acv.gamma[0] > 0.0))
        fail(Errc::degenerate_series, "gamma_0 must be positive");
    return levinson(acv.gamma, p_max).sigma2;
}

int select_lag_aic(std::span<const double> segment, int p_max) {
    const int n = static_cast<int>(segment.size());
    AutocovarianceVector acv = sample_autocovariance(segment, p_max);
    std::vector<double> sigma2 = innovation_variances(acv, p_max);

    int best_p = -1;
    double best_aic = std::numeric_limits<double>::infinity();
    for (int p = 0; p < static_cast<int>(sigma2.size()); ++p) {
        if (!(sigma2[p] > 0.0))
            continue; // skipped: no admissible innovation variance
        const double aic = n * std::log(sigma2[p]) + 2.0 * p;
        if (aic < best_aic) {
            best_aic = aic;
            best_p = p;
        }
    }
    if (best_p < 0)
        fail(Errc::degenerate_series, "no admissible AR order");
    return best_p;
}

std::vector<double> ar_spectral_density(const ArModel& model,
                                        std::span<const double> lambdas) {
    const int p = model.order();
    double coef_scale = 1.0;
    for (double c : model.phi)
        coef_scale += std::abs(c);
    const double tol = 1e3 * std::numeric_limits<double>::epsilon() * coef_scale;

    std::vector<double> out;
    out.reserve(lambdas.size());
    for (double lambda : lambdas) {
        double re = 1.0;
        double im = 0.0;
        for (int j = 1; j <= p; ++j) {
            re -= model.phi[j - 1] * std::cos(j * lambda);
            im += model.phi[j - 1] * std::sin(j * lambda);
        }
        const double denom = re * re + im * im;
        if (denom < tol * tol)
            fail(Errc::spectral_pole,
                 "characteristic polynomial vanishes at lambda = " +
                     std::to_string(lambda));
        out.push_back(model.sigma2 / (2.0 * std::numbers::pi * denom));
    }
    return out;
}

std::vector<double> residuals(std::span<const double> x, const ArModel& model,
                              IndexRange range) {
    const int T = static_cast<int>(x.size());
    const int p = model.order();
    if (range.begin > range.end || range.end > T || range.begin < 0)
        fail(Errc::invalid_input, "bad residual range");
    if (range.begin < p)
        fail(Errc::insufficient_history,
             "range starts at " + std::to_string(range.begin) +
                 " but the model needs " + std::to_string(p) + " lags");
    std::vector<double> out;
    out.reserve(range.end - range.begin);
    for (int t = range.begin; t < range.end; ++t) {
        double pred = 0.0;
        for (int j = 1; j <= p; ++j)
            pred += model.phi[j - 1] * x[t - j];
        out.push_back(x[t] - pred);
    }
    return out;
}

} // namespace cpd
