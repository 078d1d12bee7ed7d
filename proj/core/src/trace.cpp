#include "mpecbt/trace.hpp"

#include <cstdio>
#include <sstream>

namespace mpecbt {

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void SolveTrace::write_csv(std::ostream& os) const {
  os << "iter,step_type,value,pred_decrease,radius,stat_residual\n";
  for (const TraceRecord& r : records) {
    os << r.iter << ',' << r.step_type << ',' << format_real(r.value) << ',' << format_real(r.pred_decrease) << ','
       << format_real(r.radius) << ',' << format_real(r.stat_residual) << '\n';
  }
}

std::string SolveTrace::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

}  // namespace mpecbt
