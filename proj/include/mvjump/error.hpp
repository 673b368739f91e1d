#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mvjump {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition on numeric input was violated (bad rate, unnormalized
// weights, measure outside M_b, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Expression / polynomial text could not be parsed.
class ParseError : public Error {
public:
    ParseError(std::size_t position, const std::string& what)
        : Error("parse error at position " + std::to_string(position) + ": " + what),
          position_(position) {}

    [[nodiscard]] std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// A coefficient function asked for a moment the measure state does not carry.
class MissingMomentError : public Error {
public:
    MissingMomentError(int index, int available)
        : Error("moment of order " + std::to_string(index) +
                " requested but only " + std::to_string(available) + " available"),
          index_(index) {}

    [[nodiscard]] int index() const noexcept { return index_; }

private:
    int index_;
};

// Cost term that the selected backend cannot evaluate.
class CostNotEvaluableError : public Error {
public:
    explicit CostNotEvaluableError(const std::string& term)
        : Error("cost term '" + term + "' is not evaluable on the moment backend"),
          term_(term) {}

    [[nodiscard]] const std::string& term() const noexcept { return term_; }

private:
    std::string term_;
};

// Particle state became non-finite.
class SimulationError : public Error {
public:
    SimulationError(std::size_t step, double time, const std::string& what)
        : Error("simulation failed at step " + std::to_string(step) + " (t=" +
                std::to_string(time) + "): " + what),
          step_(step), time_(time) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    std::size_t step_;
    double time_;
};

// Picard iteration did not reach the tolerance.
class ConvergenceError : public Error {
public:
    explicit ConvergenceError(std::vector<double> gaps)
        : Error("Picard iteration did not converge after " +
                std::to_string(gaps.size()) + " iterations"),
          gaps_(std::move(gaps)) {}

    [[nodiscard]] const std::vector<double>& gaps() const noexcept { return gaps_; }

private:
    std::vector<double> gaps_;
};

// Exhaustive control search would exceed the configured candidate budget.
class BudgetError : public Error {
public:
    using Error::Error;
};

// Config validation; carries every violated field.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> problems)
        : Error(join(problems)), problems_(std::move(problems)) {}

    [[nodiscard]] const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    static std::string join(const std::vector<std::string>& items) {
        std::string out = "invalid configuration:";
        for (const auto& p : items) out += "\n  - " + p;
        return out;
    }

    std::vector<std::string> problems_;
};

}  // namespace mvjump
