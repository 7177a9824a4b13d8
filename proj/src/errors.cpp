#include "bhd/errors.hpp"

namespace bhd {

std::string to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::not_converged: return "not_converged";
    case ErrorKind::unsupported_degeneracy: return "unsupported_degeneracy";
    case ErrorKind::ill_conditioned: return "ill_conditioned";
    case ErrorKind::step_underflow: return "step_underflow";
    case ErrorKind::blow_up: return "blow_up";
    case ErrorKind::undefined_correlation: return "undefined_correlation";
    case ErrorKind::positivity: return "positivity";
    }
    return "unknown";
}

} // namespace bhd
