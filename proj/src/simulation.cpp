#include "cpd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "cpd/errors.hpp"

namespace cpd {

namespace {

constexpr double kAr3Coeffs[3] = {0.9, -0.5, 0.3};

enum class ProcessKind { ma1, ar1, ar3, nonlinear };

struct ProcessSpec {
    ProcessKind kind;
    double param = 0.0; // theta for ma1, phi for ar1/nonlinear
};

ProcessSpec pre_process(const ScenarioSpec& s) {
    switch (s.id) {
    case ScenarioId::I:
    case ScenarioId::II:
    case ScenarioId::IV:
        return {ProcessKind::ma1, *s.theta};
    case ScenarioId::III:
    case ScenarioId::V:
        return {ProcessKind::ar3};
    }
    fail(Errc::invalid_spec, "unknown scenario");
}

ProcessSpec post_process(const ScenarioSpec& s) {
    switch (s.id) {
    case ScenarioId::I:
    case ScenarioId::V:
        return {ProcessKind::nonlinear, *s.phi};
    case ScenarioId::II:
    case ScenarioId::III:
        return {ProcessKind::ar1, *s.phi};
    case ScenarioId::IV:
        return {ProcessKind::ar3};
    }
    fail(Errc::invalid_spec, "unknown scenario");
}

// Appends `count` values of the process to `out`, advancing the recursion
// from whatever state `out` already ends with (plus `warmup` discarded
// steps when starting fresh).
void extend(std::vector<double>& out, const ProcessSpec& proc, int count,
            int warmup, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, sigma);
    auto lag = [&](int back) {
        const int n = static_cast<int>(out.size());
        return n >= back ? out[n - back] : 0.0;
    };
    switch (proc.kind) {
    case ProcessKind::ma1: {
        double eps_prev = gauss(rng);
        for (int t = 0; t < warmup; ++t) {
            const double eps = gauss(rng);
            eps_prev = eps;
        }
        for (int t = 0; t < count; ++t) {
            const double eps = gauss(rng);
            out.push_back(eps + proc.param * eps_prev);
            eps_prev = eps;
        }
        break;
    }
    case ProcessKind::ar1: {
        double state = lag(1);
        for (int t = 0; t < warmup; ++t)
            state = proc.param * state + gauss(rng);
        for (int t = 0; t < count; ++t) {
            state = proc.param * state + gauss(rng);
            out.push_back(state);
        }
        break;
    }
    case ProcessKind::ar3: {
        double s1 = lag(1), s2 = lag(2), s3 = lag(3);
        auto step = [&] {
            const double next = kAr3Coeffs[0] * s1 + kAr3Coeffs[1] * s2 +
                                kAr3Coeffs[2] * s3 + gauss(rng);
            s3 = s2;
            s2 = s1;
            s1 = next;
            return next;
        };
        for (int t = 0; t < warmup; ++t)
            step();
        for (int t = 0; t < count; ++t)
            out.push_back(step());
        break;
    }
    case ProcessKind::nonlinear: {
        double state = lag(1);
        for (int t = 0; t < warmup; ++t)
            state = proc.param * std::abs(state) + gauss(rng);
        for (int t = 0; t < count; ++t) {
            state = proc.param * std::abs(state) + gauss(rng);
            out.push_back(state);
        }
        break;
    }
    }
}

std::vector<double> process_spectrum(const ProcessSpec& proc, double sigma,
                                     std::span<const double> lambdas);

} // namespace

ScenarioId scenario_from_string(const std::string& name) {
    if (name == "I" || name == "1") return ScenarioId::I;
    if (name == "II" || name == "2") return ScenarioId::II;
    if (name == "III" || name == "3") return ScenarioId::III;
    if (name == "IV" || name == "4") return ScenarioId::IV;
    if (name == "V" || name == "5") return ScenarioId::V;
    fail(Errc::invalid_spec, "unknown scenario '" + name + "'");
}

const char* scenario_name(ScenarioId id) {
    switch (id) {
    case ScenarioId::I: return "I";
    case ScenarioId::II: return "II";
    case ScenarioId::III: return "III";
    case ScenarioId::IV: return "IV";
    case ScenarioId::V: return "V";
    }
    return "?";
}

void validate(const ScenarioSpec& spec) {
    auto needs_theta = spec.id == ScenarioId::I || spec.id == ScenarioId::II ||
                       spec.id == ScenarioId::IV;
    auto needs_phi = spec.id != ScenarioId::IV;
    if (needs_theta && !spec.theta)
        fail(Errc::invalid_spec, "scenario requires theta");
    if (needs_phi && !spec.phi)
        fail(Errc::invalid_spec, "scenario requires phi");
    if (!(spec.sigma > 0.0))
        fail(Errc::invalid_spec, "sigma must be positive");
    if (spec.burn_in < 0)
        fail(Errc::invalid_spec, "burn_in must be >= 0");
    if (spec.k_star < 20 || spec.T - spec.k_star < 20)
        fail(Errc::invalid_spec,
             "k_star must leave at least 20 points on each side");
}

TimeSeries generate_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    validate(spec);
    std::mt19937_64 rng(seed);
    std::vector<double> values;
    values.reserve(spec.T);
    extend(values, pre_process(spec), spec.k_star, spec.burn_in, spec.sigma,
           rng);
    const ProcessSpec post = post_process(spec);
    if (spec.splice == SplicePolicy::continuous && post.kind != ProcessKind::ma1) {
        extend(values, post, spec.T - spec.k_star, 0, spec.sigma, rng);
    } else {
        // independent restart (and MA(1), which has no lagged-x state)
        std::vector<double> tail;
        extend(tail, post, spec.T - spec.k_star, spec.burn_in, spec.sigma, rng);
        values.insert(values.end(), tail.begin(), tail.end());
    }
    return make_series(std::move(values));
}

ReplicationReport run_replications(const ScenarioSpec& spec,
                                   const DetectionConfig& config,
                                   std::span<const double> levels, int reps,
                                   std::uint64_t seed, const McSettings& mc,
                                   NoiseInteraction form, Execution exec,
                                   Detector detector) {
    validate(spec);
    if (reps < 1)
        fail(Errc::invalid_input, "reps must be >= 1");
    for (double level : levels)
        if (!(level > 0.0 && level < 1.0))
            fail(Errc::invalid_input, "levels must lie in (0,1)");
    if (!detector)
        detector = [](const TimeSeries& x, const DetectionConfig& c) {
            return detect(x, c);
        };

    struct RepOutcome {
        bool ok = false;
        std::string reason;
        int k_hat = 0;
        int k_tilde = 0;
        std::vector<ConfidenceInterval> cis;
    };
    std::vector<RepOutcome> outcomes(reps);

    auto run_one = [&](int r) {
        RepOutcome& res = outcomes[r];
        try {
            TimeSeries x = generate_scenario(spec, seed + r);
            TimeSeries prepared =
                config.demean ? demeaned_copy(x) : std::move(x);
            DetectionConfig cfg = config;
            cfg.demean = false;
            // replication-level parallelism owns the workers
            cfg.exec = Execution::serial;
            DetectionResult det = detector(prepared, cfg);
            res.k_hat = det.k_hat;
            res.k_tilde = det.k_tilde;
            if (!levels.empty()) {
                const NuisanceEstimates nuis = nuisance_estimates(
                    prepared, det.k_tilde, det.model_pre, det.model_post,
                    det.p_common, form);
                McSettings rep_mc = mc;
                rep_mc.seed = derive_seed(mc.seed, static_cast<std::uint64_t>(r));
                std::vector<double> need;
                for (double level : levels) {
                    need.push_back((1.0 - level) / 2.0);
                    need.push_back((1.0 + level) / 2.0);
                }
                const QuantileTable table = simulate_argmax_quantiles(
                    limit_params(nuis), rep_mc, need, Execution::serial);
                for (double level : levels)
                    res.cis.push_back(confidence_interval(
                        det.k_tilde, prepared.length(), nuis, table, level));
            }
            res.ok = true;
        } catch (const Error& e) {
            res.reason = errc_name(e.code());
        } catch (const std::exception& e) {
            res.reason = e.what();
        }
    };

    if (exec == Execution::serial) {
        for (int r = 0; r < reps; ++r)
            run_one(r);
    } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(worker_cap())
#endif
        for (int r = 0; r < reps; ++r)
            run_one(r);
    }

    ReplicationReport report;
    report.reps = reps;
    double ab_h = 0.0, ab_t = 0.0, sq_h = 0.0, sq_t = 0.0;
    std::vector<int> cover(levels.size(), 0);
    std::vector<double> lengths(levels.size(), 0.0);
    int ok_count = 0;
    for (const RepOutcome& res : outcomes) {
        if (!res.ok) {
            ++report.failure_count;
            ++report.failure_reasons[res.reason];
            continue;
        }
        ++ok_count;
        const double dh = std::abs(res.k_hat - spec.k_star);
        const double dt = std::abs(res.k_tilde - spec.k_star);
        ab_h += dh;
        ab_t += dt;
        sq_h += dh * dh;
        sq_t += dt * dt;
        for (std::size_t i = 0; i < res.cis.size(); ++i) {
            if (res.cis[i].lower <= spec.k_star &&
                spec.k_star <= res.cis[i].upper)
                ++cover[i];
            lengths[i] += res.cis[i].upper - res.cis[i].lower;
        }
    }
    if (ok_count > 0) {
        report.ab_hat = ab_h / ok_count;
        report.ab_tilde = ab_t / ok_count;
        report.rmse_hat = std::sqrt(sq_h / ok_count);
        report.rmse_tilde = std::sqrt(sq_t / ok_count);
        for (std::size_t i = 0; i < levels.size(); ++i) {
            report.coverage[levels[i]] =
                static_cast<double>(cover[i]) / ok_count;
            report.ci_mean_length[levels[i]] = lengths[i] / ok_count;
        }
    }
    return report;
}

namespace {

std::vector<double> process_spectrum(const ProcessSpec& proc, double sigma,
                                     std::span<const double> lambdas) {
    const double sigma2 = sigma * sigma;
    std::vector<double> out;
    out.reserve(lambdas.size());
    switch (proc.kind) {
    case ProcessKind::ma1: {
        const double theta = proc.param;
        for (double lambda : lambdas)
            out.push_back(sigma2 *
                          (1.0 + theta * theta + 2.0 * theta * std::cos(lambda)) /
                          (2.0 * std::numbers::pi));
        return out;
    }
    case ProcessKind::ar1:
        return ar_spectral_density(ArModel{{proc.param}, sigma2}, lambdas);
    case ProcessKind::ar3:
        return ar_spectral_density(
            ArModel{{kAr3Coeffs[0], kAr3Coeffs[1], kAr3Coeffs[2]}, sigma2},
            lambdas);
    case ProcessKind::nonlinear: {
        // no closed form: AR(30) sieve on a long simulated path
        std::mt19937_64 rng(0x5EEDF00Dull);
        std::vector<double> path;
        path.reserve(100000);
        extend(path, proc, 100000, 1000, sigma, rng);
        const ArModel sieve = yule_walker(sample_autocovariance(path, 30), 30);
        return ar_spectral_density(sieve, lambdas);
    }
    }
    fail(Errc::invalid_spec, "unknown process");
}

} // namespace

std::pair<std::vector<double>, std::vector<double>>
true_spectral_curves(const ScenarioSpec& spec,
                     std::span<const double> lambdas) {
    validate(spec);
    return {process_spectrum(pre_process(spec), spec.sigma, lambdas),
            process_spectrum(post_process(spec), spec.sigma, lambdas)};
}

} // namespace cpd
