#include "cpd/errors.hpp"

namespace cpd {

const char* errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_input: return "invalid_input";
    case Errc::order_too_large: return "order_too_large";
    case Errc::degenerate_series: return "degenerate_series";
    case Errc::singular_system: return "singular_system";
    case Errc::spectral_pole: return "spectral_pole";
    case Errc::insufficient_history: return "insufficient_history";
    case Errc::degenerate_segment: return "degenerate_segment";
    case Errc::series_too_short: return "series_too_short";
    case Errc::no_jump: return "no_jump";
    case Errc::invalid_params: return "invalid_params";
    case Errc::table_incomplete: return "table_incomplete";
    case Errc::invalid_spec: return "invalid_spec";
    }
    return "unknown";
}

void fail(Errc code, const std::string& what) {
    throw Error(code, std::string(errc_name(code)) + ": " + what);
}

} // namespace cpd
