#pragma once

#include <stdexcept>
#include <string>

namespace cpd {

enum class Errc {
    invalid_input,
    order_too_large,
    degenerate_series,
    singular_system,
    spectral_pole,
    insufficient_history,
    degenerate_segment,
    series_too_short,
    no_jump,
    invalid_params,
    table_incomplete,
    invalid_spec,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

} // namespace cpd
