#ifndef STAGEDTREE_ERROR_HPP
#define STAGEDTREE_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace stagedtree {

// Validation failures carry a stable code so the CLI can emit a
// machine-readable error object.
enum class ErrorCode {
    ParseError,
    UnknownField,
    UnknownVertex,
    DuplicateVertex,
    MultipleParents,
    MultipleRoots,
    VertexWithOneChild,
    StageOutDegreeMismatch,
    CycleDetected,
    DownwardEdgeInconsistentWithinStage,
    DownwardEdgeOutOfRange,
    IndexOutOfRange,
    InvalidParameter,
    InvalidDistribution,
    BoundaryParameter,
    ZeroMass,
    NontrivialStaging,
    NotAStar,
    VariableMismatch,
    OrderInconsistentWithDAG,
    CycleInGraph,
    InvalidCPT,
    UnknownCategory,
    RowDoesNotReachLeaf,
    MalformedCsv,
    ZeroStageTraffic,
    EmptyTable,
    InvalidConfig,
};

inline constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::DuplicateVertex: return "DuplicateVertex";
    case ErrorCode::MultipleParents: return "MultipleParents";
    case ErrorCode::MultipleRoots: return "MultipleRoots";
    case ErrorCode::VertexWithOneChild: return "VertexWithOneChild";
    case ErrorCode::StageOutDegreeMismatch: return "StageOutDegreeMismatch";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::DownwardEdgeInconsistentWithinStage: return "DownwardEdgeInconsistentWithinStage";
    case ErrorCode::DownwardEdgeOutOfRange: return "DownwardEdgeOutOfRange";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::BoundaryParameter: return "BoundaryParameter";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::NontrivialStaging: return "NontrivialStaging";
    case ErrorCode::NotAStar: return "NotAStar";
    case ErrorCode::VariableMismatch: return "VariableMismatch";
    case ErrorCode::OrderInconsistentWithDAG: return "OrderInconsistentWithDAG";
    case ErrorCode::CycleInGraph: return "CycleInGraph";
    case ErrorCode::InvalidCPT: return "InvalidCPT";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::RowDoesNotReachLeaf: return "RowDoesNotReachLeaf";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::ZeroStageTraffic: return "ZeroStageTraffic";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace stagedtree

#endif  // STAGEDTREE_ERROR_HPP
