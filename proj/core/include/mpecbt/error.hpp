#pragma once

#include <stdexcept>
#include <string>

namespace mpecbt {

enum class Errc {
  singular_matrix,
  infeasible_point,
  multiplier_residual_too_large,
  not_in_graph,
  dimension_mismatch,
  prox_unavailable,
  singular_newton_matrix,
  max_iterations_exceeded,
  line_search_stalled,
  lower_level_failure,
  qp_infeasible,
  oracle_failure,
  damping_stalled,
  schema_error,
};

const char* to_string(Errc code) noexcept;

/// Single exception type for the library; `code()` identifies the failure
/// class so callers (the CLI in particular) can map it without string
/// matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mpecbt
