#pragma once

#include <stdexcept>
#include <string>

namespace hypergame {

enum class ErrorCode {
    MaxIterations,
    Infeasible,
    NonFiniteEvaluation,
    DimensionMismatch,
    RelaxationStalled,
    NewtonDiverged,
    NoFeasibleStart,
    SingularDualSystem,
    PerceivedProblemNotSolved,
    NotAKktPoint,
    NotThetaLinear,
    RankDeficientT,
    ActiveSetDegenerate,
    SingularKktJacobian,
    MissingDuals,
    MissingSeries,
    ParseError,
    UnknownMode,
    SolverFailure,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NonFiniteEvaluation: return "NonFiniteEvaluation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RelaxationStalled: return "RelaxationStalled";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::NoFeasibleStart: return "NoFeasibleStart";
    case ErrorCode::SingularDualSystem: return "SingularDualSystem";
    case ErrorCode::PerceivedProblemNotSolved: return "PerceivedProblemNotSolved";
    case ErrorCode::NotAKktPoint: return "NotAKktPoint";
    case ErrorCode::NotThetaLinear: return "NotThetaLinear";
    case ErrorCode::RankDeficientT: return "RankDeficientT";
    case ErrorCode::ActiveSetDegenerate: return "ActiveSetDegenerate";
    case ErrorCode::SingularKktJacobian: return "SingularKktJacobian";
    case ErrorCode::MissingDuals: return "MissingDuals";
    case ErrorCode::MissingSeries: return "MissingSeries";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownMode: return "UnknownMode";
    case ErrorCode::SolverFailure: return "SolverFailure";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace hypergame
