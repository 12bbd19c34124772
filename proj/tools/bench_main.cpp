// Times the serial reference path of each parallel kernel against the
// OpenMP path and checks that both produce the same results.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "cpd/detection.hpp"
#include "cpd/inference.hpp"
#include "cpd/parallel.hpp"
#include "cpd/simulation.hpp"

using namespace cpd;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
}

void report(const char* name, double serial_ms, double parallel_ms,
            bool equal) {
    std::printf("%-24s  serial %9.1f ms   parallel %9.1f ms   speedup %5.2fx   %s\n",
                name, serial_ms, parallel_ms, serial_ms / parallel_ms,
                equal ? "results equal" : "RESULTS DIFFER");
}

void bench_sweep() {
    ScenarioSpec spec;
    spec.id = ScenarioId::III;
    spec.phi = -0.9;
    spec.T = 20000;
    spec.k_star = 8000;
    const TimeSeries x = generate_scenario(spec, 7);

    const auto stats = detail::PrefixStats::build(x.view(), 12);
    std::vector<int> candidates;
    for (int k = 60; k <= spec.T - 60; ++k)
        candidates.push_back(k);

    auto t0 = std::chrono::steady_clock::now();
    const auto serial =
        detail::sweep_losses(stats, candidates, 12, 12, Execution::serial);
    const double serial_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel =
        detail::sweep_losses(stats, candidates, 12, 12, Execution::parallel);
    const double parallel_ms = ms_since(t0);

    report("stage-1 sweep", serial_ms, parallel_ms, serial == parallel);
}

void bench_quantiles() {
    const LimitParams params{1.0, 1.3, 1.1, 0.9};
    McSettings mc;
    mc.paths = 20000;

    auto t0 = std::chrono::steady_clock::now();
    const QuantileTable serial =
        simulate_argmax_quantiles(params, mc, {}, Execution::serial);
    const double serial_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    const QuantileTable parallel =
        simulate_argmax_quantiles(params, mc, {}, Execution::parallel);
    const double parallel_ms = ms_since(t0);

    report("argmax quantile MC", serial_ms, parallel_ms,
           serial.quants == parallel.quants);
}

void bench_replications() {
    ScenarioSpec spec;
    spec.id = ScenarioId::II;
    spec.theta = -0.9;
    spec.phi = 0.5;
    spec.T = 500;
    spec.k_star = 250;
    DetectionConfig config;
    McSettings mc;
    mc.paths = 2000;

    auto t0 = std::chrono::steady_clock::now();
    const auto serial = run_replications(spec, config, {}, 40, 1, mc,
                                         NoiseInteraction::robust,
                                         Execution::serial);
    const double serial_ms = ms_since(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel = run_replications(spec, config, {}, 40, 1, mc,
                                           NoiseInteraction::robust,
                                           Execution::parallel);
    const double parallel_ms = ms_since(t0);

    const bool equal = serial.ab_hat == parallel.ab_hat &&
                       serial.ab_tilde == parallel.ab_tilde &&
                       serial.rmse_tilde == parallel.rmse_tilde;
    report("replication harness", serial_ms, parallel_ms, equal);
}

} // namespace

int main() {
    std::printf("worker cap: %d\n", worker_cap());
    bench_sweep();
    bench_quantiles();
    bench_replications();
    return 0;
}
