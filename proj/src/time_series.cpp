#include "cpd/time_series.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cpd/errors.hpp"

namespace cpd {

TimeSeries make_series(std::vector<double> values) {
    if (values.empty())
        fail(Errc::invalid_input, "series must contain at least one value");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            fail(Errc::invalid_input,
                 "non-finite value at position " + std::to_string(i));
    }
    return TimeSeries{std::move(values), false};
}

TimeSeries demeaned_copy(const TimeSeries& x) {
    const double mean =
        std::accumulate(x.values.begin(), x.values.end(), 0.0) / x.length();
    TimeSeries out;
    out.values.reserve(x.values.size());
    for (double v : x.values)
        out.values.push_back(v - mean);
    out.demeaned = true;
    return out;
}

} // namespace cpd
