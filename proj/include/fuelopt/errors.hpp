#pragma once

#include <stdexcept>
#include <string>

namespace fuelopt {

/// Malformed case or solution document. Carries the offending field and
/// where it was found (e.g. "generators[2]").
class ParseError : public std::runtime_error {
public:
    ParseError(std::string field, std::string location, const std::string& what)
        : std::runtime_error(format(field, location, what)),
          field_(std::move(field)),
          location_(std::move(location)) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& location() const noexcept { return location_; }

private:
    static std::string format(const std::string& field, const std::string& location,
                              const std::string& what) {
        std::string msg = "parse error";
        if (!location.empty()) msg += " at " + location;
        if (!field.empty()) msg += " (field '" + field + "')";
        return msg + ": " + what;
    }

    std::string field_;
    std::string location_;
};

/// A cross-reference (bus id, unit id) that does not resolve.
class ReferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Efficiency curve with a > 0: the cap s <= eta(p) would be nonconvex.
class UnsupportedCurvature : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Angle linearization requested at (or too near) the origin.
class DegeneratePoint : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Conic assembly referenced a variable that was never registered.
class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fuelopt
