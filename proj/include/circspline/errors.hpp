#pragma once

#include <stdexcept>
#include <string>

namespace circspline {

/// Bad user-supplied data: malformed files, out-of-range values, size
/// mismatches. Maps to process exit code 2.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A computation that cannot proceed: singular or indefinite normal matrix,
/// no finite objective value, failed validation of computed quantities.
/// Maps to process exit code 3.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration: unknown keys, unparsable or out-of-domain settings.
/// Maps to process exit code 4.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace circspline
