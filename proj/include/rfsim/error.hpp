#pragma once

// Exception hierarchy shared by every rfsim module.

#include <stdexcept>
#include <string>
#include <vector>

namespace rfsim {

/// Root of all rfsim errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ParseErrorKind {
    malformed_number,
    unknown_suffix,
    duplicate_name,
    unknown_element,
    arity_mismatch,
    missing_model,
    invalid_value,
    unknown_parameter,
    bad_directive,
    bad_port,
};

inline const char* to_string(ParseErrorKind kind) {
    switch (kind) {
    case ParseErrorKind::malformed_number: return "malformed_number";
    case ParseErrorKind::unknown_suffix: return "unknown_suffix";
    case ParseErrorKind::duplicate_name: return "duplicate_name";
    case ParseErrorKind::unknown_element: return "unknown_element";
    case ParseErrorKind::arity_mismatch: return "arity_mismatch";
    case ParseErrorKind::missing_model: return "missing_model";
    case ParseErrorKind::invalid_value: return "invalid_value";
    case ParseErrorKind::unknown_parameter: return "unknown_parameter";
    case ParseErrorKind::bad_directive: return "bad_directive";
    case ParseErrorKind::bad_port: return "bad_port";
    }
    return "unknown";
}

/// Netlist text could not be parsed. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
public:
    ParseError(ParseErrorKind kind, const std::string& message, int line = 0, int column = 0)
        : Error(format(message, line, column)), kind_(kind), line_(line), column_(column),
          detail_(message) {}

    [[nodiscard]] ParseErrorKind kind() const noexcept { return kind_; }
    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] int column() const noexcept { return column_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

    /// Same error relocated to a netlist position (used when a value token is
    /// parsed out of context and the caller knows where it came from).
    [[nodiscard]] ParseError at(int line, int column) const {
        return ParseError(kind_, detail_, line, column);
    }

private:
    static std::string format(const std::string& message, int line, int column) {
        if (line <= 0) return message;
        std::string out = "line " + std::to_string(line);
        if (column > 0) out += ", column " + std::to_string(column);
        return out + ": " + message;
    }

    ParseErrorKind kind_;
    int line_;
    int column_;
    std::string detail_;
};

/// Structural problem found while flattening a parsed circuit.
class ElaborationError : public Error {
public:
    ElaborationError(const std::string& message, std::string node = {})
        : Error(message), node_(std::move(node)) {}
    [[nodiscard]] const std::string& node() const noexcept { return node_; }

private:
    std::string node_;
};

/// The circuit graph cannot produce a unique solution (floating pieces,
/// source/inductor loops, lone sources).
class TopologyError : public Error {
public:
    using Error::Error;
};

/// LU factorization hit a pivot below tolerance.
class SingularMatrixError : public Error {
public:
    explicit SingularMatrixError(int unknown)
        : Error("singular matrix: zero pivot at unknown " + std::to_string(unknown)),
          unknown_(unknown) {}
    [[nodiscard]] int unknown() const noexcept { return unknown_; }

private:
    int unknown_;
};

/// Newton iteration failed after the whole continuation ladder (DC) or at a
/// time point (transient).
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& message, std::string worst_signal = {}, double where = 0.0)
        : Error(message), worst_signal_(std::move(worst_signal)), where_(where) {}
    [[nodiscard]] const std::string& worst_signal() const noexcept { return worst_signal_; }
    /// Time point (transient) or frequency, 0 for DC.
    [[nodiscard]] double where() const noexcept { return where_; }

private:
    std::string worst_signal_;
    double where_;
};

/// Periodic steady state not reached within the allowed number of periods.
/// Carries the period-to-period residual after each simulated period.
class SettlingError : public Error {
public:
    SettlingError(const std::string& message, std::vector<double> trace)
        : Error(message), trace_(std::move(trace)) {}
    [[nodiscard]] const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

/// Bad analysis arguments (step > stop, non-commensurate tones, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A post-processing measurement is undefined for the given waveforms.
class MeasurementError : public Error {
public:
    using Error::Error;
};

} // namespace rfsim
