#include "cpd/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cpd {

static int read_worker_cap() {
#ifdef _OPENMP
    int cap = omp_get_max_threads();
#else
    int cap = 1;
#endif
    if (const char* env = std::getenv("CPD_THREADS")) {
        try {
            int requested = std::stoi(env);
            if (requested >= 1 && requested < cap)
                cap = requested;
        } catch (...) {
            // ignore malformed values, keep the runtime default
        }
    }
    return cap < 1 ? 1 : cap;
}

int worker_cap() {
    static const int cap = read_worker_cap();
    return cap;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 applied to the (base, stream) pair
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace cpd
