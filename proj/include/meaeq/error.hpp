#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace meaeq {

enum class ErrorCode : std::uint8_t {
    Io,
    EmptyCorpus,
    NotFound,
    MissingScore,
    Backend,
    EmptyFilterResult,
    Inconsistent,
    DegenerateVector,
    KTooLarge,
    InvalidK,
    TooLarge,
    ShortPool,
    ZeroBudget,
    InvalidDistribution,
    Config,
    BudgetExhausted,
    VictimUnavailable,
    DegenerateTraining,
    NumericalDivergence,
    InvalidBatch,
    Parse,
    Shape,
    Format,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by the TRF stage when nothing passes the threshold.
class EmptyFilterResult : public Error {
public:
    EmptyFilterResult(double max_entailment, const std::string& message)
        : Error(ErrorCode::EmptyFilterResult, message), max_entailment_(max_entailment) {}

    double max_entailment() const noexcept { return max_entailment_; }

private:
    double max_entailment_;
};

class DegenerateCentroid : public Error {
public:
    DegenerateCentroid(std::size_t cluster, const std::string& message)
        : Error(ErrorCode::DegenerateVector, message), cluster_(cluster) {}

    std::size_t cluster() const noexcept { return cluster_; }

private:
    std::size_t cluster_;
};

class NumericalDivergence : public Error {
public:
    NumericalDivergence(std::size_t step, const std::string& message)
        : Error(ErrorCode::NumericalDivergence, message), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace meaeq
