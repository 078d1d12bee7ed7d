#include "mpecbt/error.hpp"

namespace mpecbt {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::singular_matrix: return "SingularMatrix";
    case Errc::infeasible_point: return "InfeasiblePoint";
    case Errc::multiplier_residual_too_large: return "MultiplierResidualTooLarge";
    case Errc::not_in_graph: return "NotInGraph";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::prox_unavailable: return "ProxUnavailable";
    case Errc::singular_newton_matrix: return "SingularNewtonMatrix";
    case Errc::max_iterations_exceeded: return "MaxIterationsExceeded";
    case Errc::line_search_stalled: return "LineSearchStalled";
    case Errc::lower_level_failure: return "LowerLevelFailure";
    case Errc::qp_infeasible: return "QpInfeasible";
    case Errc::oracle_failure: return "OracleFailure";
    case Errc::damping_stalled: return "DampingStalled";
    case Errc::schema_error: return "SchemaError";
  }
  return "Unknown";
}

}  // namespace mpecbt
