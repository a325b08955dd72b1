#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace articulate {

enum class ErrorCode {
    DuplicateId,
    UnknownInstitution,
    UnknownCourse,
    MalformedRow,
    SelfPair,
    EmptyInput,
    TooFewPairs,
    DimensionMismatch,
    DuplicateCourse,
    EmptyCorpus,
    DisjointKeys,
    ZeroVector,
    MissingEmbedding,
    NoPairs,
    RankDeficient,
    EmptyPool,
    InsufficientPopulation,
    EmptyScores,
    EmptyGroup,
    MixedDimensions,
    CoverageMismatch,
    IoError,
    InvalidConfig,
    UsageError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownInstitution: return "UnknownInstitution";
    case ErrorCode::UnknownCourse: return "UnknownCourse";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::SelfPair: return "SelfPair";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateCourse: return "DuplicateCourse";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DisjointKeys: return "DisjointKeys";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::NoPairs: return "NoPairs";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::InsufficientPopulation: return "InsufficientPopulation";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::MixedDimensions: return "MixedDimensions";
    case ErrorCode::CoverageMismatch: return "CoverageMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

/// Every domain failure in the library is reported as an Error carrying a
/// stable code; what() is "<Code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail),
          code_(code), detail_(detail) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

#define ARTICULATE_REQUIRE(cond, code, detail)                                 \
    do {                                                                       \
        if (!(cond)) throw ::articulate::Error((code), (detail));              \
    } while (0)

} // namespace articulate
