// Acceptance suite: runs every release criterion at its pinned tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cpd/detection.hpp"
#include "cpd/errors.hpp"
#include "cpd/inference.hpp"
#include "cpd/simulation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace cpd;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Check {
    Outcome& out;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            out.pass = false;
            if (!out.detail.empty())
                out.detail += "; ";
            out.detail += "FAILED " + what;
        }
    }
    void note(const std::string& what) {
        if (!out.detail.empty())
            out.detail += "; ";
        out.detail += what;
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

ScenarioSpec scenario(ScenarioId id, double theta, double phi, int T,
                      int k_star) {
    ScenarioSpec spec;
    spec.id = id;
    if (id == ScenarioId::I || id == ScenarioId::II || id == ScenarioId::IV)
        spec.theta = theta;
    if (id != ScenarioId::IV)
        spec.phi = phi;
    spec.T = T;
    spec.k_star = k_star;
    return spec;
}

// 1. Scenario III localization: AB in [0.4, 2.5], RMSE <= 4 over >= 200 reps.
Outcome criterion1() {
    Outcome out;
    Check ck{out};
    const ScenarioSpec spec = scenario(ScenarioId::III, 0, -0.9, 500, 166);
    const ReplicationReport rep =
        run_replications(spec, DetectionConfig{}, {}, 200, 240501, McSettings{});
    ck.require(rep.failure_count == 0, "no replicate failures");
    ck.require(rep.ab_tilde >= 0.4 && rep.ab_tilde <= 2.5,
               "AB(k_tilde) in [0.4, 2.5]");
    ck.require(rep.rmse_tilde <= 4.0, "RMSE(k_tilde) <= 4");
    ck.note("AB=" + fmt(rep.ab_tilde) + " RMSE=" + fmt(rep.rmse_tilde));
    return out;
}

// 2. Scenario I localization and 95% coverage with per-replicate quantile
// tables at M = 10000.
Outcome criterion2() {
    Outcome out;
    Check ck{out};
    const ScenarioSpec spec = scenario(ScenarioId::I, -0.9, -0.5, 500, 250);
    McSettings mc;
    mc.paths = 10000;
    mc.seed = 2;
    const std::vector<double> levels = {0.95};
    const ReplicationReport rep = run_replications(
        spec, DetectionConfig{}, levels, 200, 510101, mc);
    ck.require(rep.ab_tilde >= 2.0 && rep.ab_tilde <= 7.0,
               "AB(k_tilde) in [2, 7]");
    const double cp = rep.coverage.at(0.95);
    ck.require(cp >= 0.90 && cp <= 1.00, "95% coverage in [0.90, 1.00]");
    ck.note("AB=" + fmt(rep.ab_tilde) + " CP95=" + fmt(cp) +
            " failures=" + std::to_string(rep.failure_count));
    return out;
}

// 3. Scenario II 90% coverage within 0.07 of 0.91.
Outcome criterion3() {
    Outcome out;
    Check ck{out};
    const ScenarioSpec spec =
        scenario(ScenarioId::II, -0.9, 0.5, 500, 2 * 500 / 3);
    McSettings mc;
    mc.paths = 10000;
    mc.seed = 3;
    const std::vector<double> levels = {0.90};
    const ReplicationReport rep = run_replications(
        spec, DetectionConfig{}, levels, 200, 620202, mc);
    const double cp = rep.coverage.at(0.90);
    ck.require(std::abs(cp - 0.91) <= 0.07, "90% coverage within 0.07 of 0.91");
    ck.note("CP90=" + fmt(cp) + " failures=" + std::to_string(rep.failure_count));
    return out;
}

// 4. Scenario I at T = 1000: mean 95% interval length in [40, 85].
Outcome criterion4() {
    Outcome out;
    Check ck{out};
    const ScenarioSpec spec = scenario(ScenarioId::I, 0.9, -0.5, 1000, 500);
    McSettings mc;
    mc.paths = 10000;
    mc.seed = 4;
    const std::vector<double> levels = {0.95};
    const ReplicationReport rep = run_replications(
        spec, DetectionConfig{}, levels, 100, 730303, mc);
    const double len = rep.ci_mean_length.at(0.95);
    ck.require(len >= 40.0 && len <= 85.0, "mean 95% CI length in [40, 85]");
    ck.note("len=" + fmt(len) + " CP95=" + fmt(rep.coverage.at(0.95)) +
            " failures=" + std::to_string(rep.failure_count));
    return out;
}

// 5. Oracle equivalences: Levinson vs dense solve, prefix-statistic losses
// vs naive recomputation, stage-2 argmin vs brute force.
Outcome criterion5() {
    Outcome out;
    Check ck{out};

    std::mt19937_64 rng(505);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> order(1, 20);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int p = order(rng);
        std::vector<double> x(p + 40 + trial % 160);
        for (double& v : x)
            v = gauss(rng);
        const AutocovarianceVector acv = sample_autocovariance(x, p);
        const ArModel m = yule_walker(acv, p);
        const std::vector<double> dense =
            oracle::solve_yule_walker_dense(acv.gamma, p);
        for (int j = 0; j < p; ++j)
            worst = std::max(worst, std::abs(m.phi[j] - dense[j]));
    }
    ck.require(worst <= 1e-8, "Levinson vs dense solve max-norm <= 1e-8");
    ck.note("solver gap=" + fmt(worst * 1e10) + "e-10");

    double worst_rel = 0.0;
    bool stage2_ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_real_distribution<double> coef(-0.7, 0.7);
        const std::vector<double> x = testutil::ar_splice(
            {coef(rng)}, {coef(rng), coef(rng) * 0.4}, 1.0, 300,
            100 + trial * 2, 808 + trial);
        const TimeSeries ts = make_series(x);
        DetectionConfig config;
        config.lag_mode = LagMode::fixed(5);
        config.min_segment = 20;
        const DetectionResult res = near_optimal_estimate(ts, config);
        for (const LossPoint& pt : res.loss_curve_stage1) {
            const double naive = oracle::naive_stage1_loss(x, pt.k, 5, 5);
            worst_rel = std::max(worst_rel,
                                 std::abs(pt.loss - naive) / std::abs(naive));
        }
        const RefitResult refit = refit_models(ts, res.k_hat, config);
        const int fast =
            optimal_estimate(x, refit.model_pre, refit.model_post, refit.p_common);
        const auto [slow, q] = oracle::brute_force_stage2(
            x, refit.model_pre, refit.model_post, refit.p_common);
        stage2_ok = stage2_ok && (fast == slow);
    }
    ck.require(worst_rel <= 1e-6,
               "incremental stage-1 loss within 1e-6 of naive recomputation");
    ck.require(stage2_ok, "stage-2 argmin identical to brute force");
    ck.note("loss gap=" + fmt(worst_rel * 1e8) + "e-8");
    return out;
}

// 6. Invariance suite: scale invariance of the argmins, nested intervals,
// exact spectral symmetry, spectral integral vs gamma_0.
Outcome criterion6() {
    Outcome out;
    Check ck{out};

    const ScenarioSpec bases[] = {
        scenario(ScenarioId::I, -0.9, -0.5, 500, 250),
        scenario(ScenarioId::II, -0.9, 0.5, 500, 166),
        scenario(ScenarioId::III, 0, -0.9, 500, 333),
        scenario(ScenarioId::IV, -0.9, 0, 500, 250),
        scenario(ScenarioId::V, 0, -0.5, 500, 250),
    };
    McSettings mc;
    mc.paths = 10000;
    mc.seed = 6;

    bool scale_ok = true;
    bool nested_ok = true;
    bool symmetry_ok = true;
    double worst_integral = 0.0;
    int draws = 0;
    for (int rep = 0; rep < 10; ++rep) {
        for (const ScenarioSpec& spec : bases) {
            ++draws;
            const std::uint64_t seed = 660000 + draws;
            const TimeSeries x = generate_scenario(spec, seed);
            const DetectionResult base = detect(x, DetectionConfig{});
            for (double c : {0.1, 3.0, 100.0}) {
                std::vector<double> scaled = x.values;
                for (double& v : scaled)
                    v *= c;
                const DetectionResult res =
                    detect(make_series(scaled), DetectionConfig{});
                scale_ok = scale_ok && res.k_hat == base.k_hat &&
                           res.k_tilde == base.k_tilde;
            }

            // nested intervals on this draw
            try {
                const NuisanceEstimates nuis = nuisance_estimates(
                    x, base.k_tilde, base.model_pre, base.model_post,
                    base.p_common);
                const QuantileTable table =
                    simulate_argmax_quantiles(limit_params(nuis), mc);
                ConfidenceInterval prev{};
                bool first = true;
                for (double level : {0.70, 0.90, 0.95, 0.99}) {
                    const ConfidenceInterval ci = confidence_interval(
                        base.k_tilde, x.length(), nuis, table, level);
                    if (!first)
                        nested_ok = nested_ok && ci.lower <= prev.lower &&
                                    ci.upper >= prev.upper;
                    prev = ci;
                    first = false;
                }
            } catch (const Error&) {
                nested_ok = false;
            }

            // exact symmetry and integral identity for the fitted spectra
            for (const ArModel* m : {&base.model_pre, &base.model_post}) {
                for (int i = 1; i <= 16; ++i) {
                    const double lambda = std::numbers::pi * i / 16.0;
                    const auto f = ar_spectral_density(
                        *m, std::vector<double>{lambda, -lambda});
                    symmetry_ok = symmetry_ok && f[0] == f[1];
                }
                const int grid = 4096;
                std::vector<double> lambdas(grid + 1);
                for (int i = 0; i <= grid; ++i)
                    lambdas[i] = -std::numbers::pi +
                                 2.0 * std::numbers::pi * i / grid;
                const auto f = ar_spectral_density(*m, lambdas);
                const double integral =
                    oracle::trapezoid(f, 2.0 * std::numbers::pi / grid);
                const double gamma0 =
                    oracle::ar_population_acv(m->phi, m->sigma2, 0)[0];
                worst_integral = std::max(
                    worst_integral, std::abs(integral - gamma0) / gamma0);
            }
        }
    }
    ck.require(scale_ok, "k_hat and k_tilde invariant to scaling");
    ck.require(nested_ok, "intervals nested across levels on every draw");
    ck.require(symmetry_ok, "f(lambda) == f(-lambda) exactly");
    ck.require(worst_integral <= 1e-3,
               "spectral integral within 1e-3 of gamma_0");
    ck.note("draws=" + std::to_string(draws) +
            " integral gap=" + fmt(worst_integral * 1e4) + "e-4");
    return out;
}

// 7. Limiting-distribution sanity: symmetric median, seed agreement,
// truncation diagnostic on scenario-fitted parameters.
Outcome criterion7() {
    Outcome out;
    Check ck{out};

    McSettings mc; // defaults: R = 200, delta = 0.05, M = 50000
    const QuantileTable sym = simulate_argmax_quantiles(
        {1, 1, 1, 1}, mc, std::vector<double>{0.5});
    ck.require(std::abs(sym.quantile(0.5)) <= 0.5,
               "symmetric argmax median within 0.5 of 0");

    McSettings other = mc;
    other.seed = 707;
    const QuantileTable sym2 = simulate_argmax_quantiles(
        {1, 1, 1, 1}, other, std::vector<double>{0.5});
    const double q95a = sym.quantile(0.95);
    const double q95b = sym2.quantile(0.95);
    ck.require(std::abs(q95a - q95b) <= 0.05 * std::abs(q95a),
               "independent seeds agree on the 95% quantile within 5%");
    ck.note("median=" + fmt(sym.quantile(0.5)) + " q95=" + fmt(q95a) + "/" +
            fmt(q95b));

    const ScenarioSpec specs[] = {
        scenario(ScenarioId::I, -0.9, -0.5, 500, 250),
        scenario(ScenarioId::II, -0.9, 0.5, 500, 250),
        scenario(ScenarioId::III, 0, -0.9, 500, 250),
        scenario(ScenarioId::IV, -0.9, 0, 500, 250),
        scenario(ScenarioId::V, 0, -0.5, 500, 250),
    };
    double worst_trunc = 0.0;
    for (const ScenarioSpec& spec : specs) {
        const TimeSeries x = generate_scenario(spec, 7007);
        const DetectionResult det = detect(x, DetectionConfig{});
        const NuisanceEstimates nuis = nuisance_estimates(
            x, det.k_tilde, det.model_pre, det.model_post, det.p_common);
        const QuantileTable table =
            simulate_argmax_quantiles(limit_params(nuis), mc);
        worst_trunc = std::max(worst_trunc, table.truncation_fraction);
    }
    ck.require(worst_trunc < 0.01,
               "truncation fraction < 1% on scenario-fitted parameters");
    ck.note("max truncation=" + fmt(worst_trunc * 100) + "%");
    return out;
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        Outcome (*run)();
    };
    const Entry entries[] = {
        {"1: scenario III localization (AB, RMSE)", criterion1},
        {"2: scenario I localization and 95% coverage", criterion2},
        {"3: scenario II 90% coverage calibration", criterion3},
        {"4: scenario I mean 95% interval length", criterion4},
        {"5: oracle equivalences", criterion5},
        {"6: invariance suite", criterion6},
        {"7: limiting-distribution sanity", criterion7},
    };
    int failures = 0;
    for (const Entry& entry : entries) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = entry.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        std::printf("criterion %s: %s (%s) [%.1fs]\n", entry.name,
                    out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
        std::fflush(stdout);
        failures += out.pass ? 0 : 1;
    }
    if (failures == 0)
        std::printf("all criteria passed\n");
    else
        std::printf("%d criterion(s) failed\n", failures);
    return failures;
}
