#pragma once

#include "mpecbt/linalg.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace mpecbt {

/// One row of a solver trace. Both solvers share the CSV columns
/// iter, step_type, value, pred_decrease, radius, stat_residual.
struct TraceRecord {
  int iter = 0;
  std::string step_type;
  double value = 0.0;
  double pred_decrease = 0.0;
  double radius = 0.0;
  double stat_residual = 0.0;
  Vector x;
};

struct SolveTrace {
  std::vector<TraceRecord> records;

  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
};

}  // namespace mpecbt
