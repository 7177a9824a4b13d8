// Typed numerical failures. The CLI maps these to exit code 3.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bhd {

enum class ErrorKind {
    capacity,
    not_converged,
    unsupported_degeneracy,
    ill_conditioned,
    step_underflow,
    blow_up,
    undefined_correlation,
    positivity,
};

std::string to_string(ErrorKind kind);

class NumericalError : public std::runtime_error {
public:
    using Detail = std::pair<std::string, double>;

    NumericalError(ErrorKind kind, const std::string& what, std::vector<Detail> details = {})
        : std::runtime_error(what), kind_(kind), details_(std::move(details)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::vector<Detail>& details() const noexcept { return details_; }

private:
    ErrorKind kind_;
    std::vector<Detail> details_;
};

} // namespace bhd
