#include "meaeq/error.hpp"

namespace meaeq {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Io: return "IoError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::Backend: return "BackendError";
    case ErrorCode::EmptyFilterResult: return "EmptyFilterResult";
    case ErrorCode::Inconsistent: return "Inconsistent";
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ShortPool: return "ShortPool";
    case ErrorCode::ZeroBudget: return "ZeroBudget";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::VictimUnavailable: return "VictimUnavailable";
    case ErrorCode::DegenerateTraining: return "DegenerateTraining";
    case ErrorCode::NumericalDivergence: return "NumericalDivergence";
    case ErrorCode::InvalidBatch: return "InvalidBatch";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Shape: return "ShapeError";
    case ErrorCode::Format: return "FormatError";
    }
    return "Unknown";
}

} // namespace meaeq
