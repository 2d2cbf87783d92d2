#ifndef KSEG_ERRORS_HPP
#define KSEG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kseg {

/// Malformed model, observation, spec or constraint.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The requested operation is not defined for this emission family.
class Unsupported : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A conditioning event has zero posterior probability, so the conditional
/// distribution it would define does not exist.
class ZeroProbabilityEvent : public std::runtime_error {
public:
    ZeroProbabilityEvent(const std::string& what, double probability)
        : std::runtime_error(what), probability_(probability) {}

    double probability() const noexcept { return probability_; }

private:
    double probability_;
};

/// Exhaustive enumeration refused because M^N exceeds the cap.
class EnumerationTooLarge : public std::length_error {
public:
    using std::length_error::length_error;
};

} // namespace kseg

#endif
