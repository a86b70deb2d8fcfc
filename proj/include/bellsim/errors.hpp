#pragma once

#include <stdexcept>
#include <string>

namespace bellsim {

/// Raised when an estimator would run on too few events to mean anything,
/// e.g. a setting pair with almost no coincidences.
class InsufficientStatisticsError : public std::runtime_error {
public:
    explicit InsufficientStatisticsError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace bellsim
