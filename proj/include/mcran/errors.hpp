#pragma once

#include <stdexcept>
#include <string>

namespace mcran {

// Lookup of an id/key that is not configured (unknown 5QI, unknown MCS, ...).
class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (d <= 0, ...).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scheduling an event in the simulated past.
class ClockViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// State-machine operation called out of sequence.
class IllegalStateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Backhaul graph query on a node that is not attached to a donor tree.
class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Requested operation is outside the supported topology (e.g. coordinated
// node replacement across different parents).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Normal equations of a position solve are singular (coplanar/collinear
// anchors). Carries the condition number that tripped the threshold.
class DegenerateGeometry : public std::runtime_error {
public:
    DegenerateGeometry(const std::string& what, double condition_number)
        : std::runtime_error(what), condition_number_(condition_number) {}
    double condition_number() const { return condition_number_; }

private:
    double condition_number_;
};

// Scenario file failed structural or semantic validation.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A runtime invariant of the simulation was broken; the CLI maps this to
// exit code 2 together with the offending timestamp.
class ContractViolation : public std::runtime_error {
public:
    ContractViolation(const std::string& what, std::int64_t time_us)
        : std::runtime_error(what + " (t=" + std::to_string(time_us) + "us)"),
          time_us_(time_us) {}
    std::int64_t time_us() const { return time_us_; }

private:
    std::int64_t time_us_;
};

} // namespace mcran
