#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mpecbt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitMaxIter = 2;

struct SolveArgs {
  std::string config;
  std::string solver = "bt";
  std::optional<std::vector<double>> x0;
  std::optional<double> tol;
  std::optional<int> maxit;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool timing = false;
};

struct CheckArgs {
  std::string config;
  std::vector<double> point;
  int fd_audit = 0;
  std::uint64_t seed = 0;
};

/// Writes report.json and trace.csv into args.out. Returns the exit code;
/// failures are described on `err`.
int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err);

/// Prints theta(x), xi and the stationarity residual as JSON on `out`.
int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err);

/// "1,2.5,-3" -> {1, 2.5, -3}; throws std::invalid_argument on bad input.
std::vector<double> parse_list(const std::string& text);

}  // namespace mpecbt::cli
