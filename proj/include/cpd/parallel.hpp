#pragma once

#include <cstdint>

namespace cpd {

// Execution policy for the data-parallel kernels (candidate sweep, Monte
// Carlo paths, replication loop). Serial and parallel runs produce
// identical results; the serial path is kept as a reference for tests and
// the benchmark tool.
enum class Execution { serial, parallel };

// Worker cap for OpenMP regions. Reads CPD_THREADS once; falls back to the
// OpenMP runtime default. Always >= 1.
int worker_cap();

// Deterministic seed for sub-stream `stream` of a base seed (splitmix64
// mix). Results do not depend on how streams are scheduled across workers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

} // namespace cpd
