#pragma once

#include <span>
#include <vector>

namespace cpd {

// Ordered real observations. Values are immutable after construction and
// safe to share across concurrent callers.
struct TimeSeries {
    std::vector<double> values;
    bool demeaned = false;

    int length() const { return static_cast<int>(values.size()); }
    std::span<const double> view() const { return values; }
};

// Validates length >= 1 and finiteness of every value.
TimeSeries make_series(std::vector<double> values);

// Copy with the global mean subtracted.
TimeSeries demeaned_copy(const TimeSeries& x);

} // namespace cpd
