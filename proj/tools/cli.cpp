#include "cli.hpp"

#include "mpecbt/error.hpp"
#include "mpecbt/problems.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mpecbt::cli {

namespace {

using nlohmann::json;

json to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw std::runtime_error("write failed for '" + path.string() + "'");
}

int fail(std::ostream& err, const std::string& what) {
  err << "error: " << what << '\n';
  return kExitError;
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (item.find_first_not_of(" \t", used) != std::string::npos) {
      throw std::invalid_argument("bad number '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    LoadedProblem lp = load_problem_file(args.config);
    if (args.x0) lp.x0 = to_vector(*args.x0);

    json report;
    report["schema_version"] = 1;
    report["problem"] = lp.id;
    report["kind"] = lp.kind;
    report["solver"] = args.solver;
    report["trace"] = "trace.csv";
    SolveTrace trace;
    bool hit_maxit = false;

    if (args.solver == "bt") {
      if (!lp.mpec) return fail(err, "problem '" + lp.id + "' has no MPEC formulation");
      if (lp.x0.size() != lp.mpec->ge.n) return fail(err, "--x0 must have " + std::to_string(lp.mpec->ge.n) + " entries");
      BtOptions opts = lp.bt;
      if (args.tol) opts.epsilon = *args.tol;
      if (args.maxit) opts.maxit = *args.maxit;
      ReducedObjective objective(*lp.mpec);
      const BtResult res = bt_minimize(
          [&](const Vector& x) {
            const OracleOutput o = objective(x);
            return OracleValue{o.value, o.xi};
          },
          lp.mpec->admissible, lp.x0, opts);
      report["x"] = to_json(res.x);
      report["value"] = res.value;
      report["stationarity_residual"] = res.stat_residual;
      report["iterations"] = res.iterations;
      report["oracle_calls"] = res.oracle_calls;
      report["status"] = to_string(res.status);
      report["max_lower_residual"] = objective.max_lower_residual();
      trace = res.trace;
      hit_maxit = res.status == BtStatus::max_iterations;
    } else if (args.solver == "ssnewton") {
      if (!lp.decomposable) return fail(err, "solver ssnewton needs a decomposable (custom_quadratic) problem");
      if (lp.x0.size() != lp.decomposable->n) return fail(err, "--x0 must have " + std::to_string(lp.decomposable->n) + " entries");
      NewtonOptions opts = lp.newton;
      if (args.tol) opts.tol = *args.tol;
      if (args.maxit) opts.maxit = *args.maxit;
      const NewtonResult res = ssnewton_minimize(*lp.decomposable, lp.x0, opts);
      report["x"] = to_json(res.x);
      report["value"] = res.value;
      report["stationarity_residual"] = res.grad_norm;
      report["iterations"] = res.iterations;
      report["status"] = "converged";
      trace = res.trace;
    } else {
      return fail(err, "unknown solver '" + args.solver + "' (expected bt or ssnewton)");
    }

    if (args.timing) {
      report["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    const std::filesystem::path dir(args.out);
    std::filesystem::create_directories(dir);
    write_file(dir / "report.json", report.dump(2) + "\n");
    write_file(dir / "trace.csv", trace.to_csv());
    out << "x = " << report["x"].dump() << "  value = " << report["value"].dump() << "  status = "
        << report["status"].get<std::string>() << '\n';
    return hit_maxit ? kExitMaxIter : kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::max_iterations_exceeded ? kExitMaxIter : kExitError;
  } catch (const std::exception& e) {
    return fail(err, e.what());
  }
}

int cmd_check(const CheckArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const LoadedProblem lp = load_problem_file(args.config);
    if (!lp.mpec) return fail(err, "problem '" + lp.id + "' has no MPEC formulation");
    const MpecProblem& mpec = *lp.mpec;
    if (static_cast<Eigen::Index>(args.point.size()) != mpec.ge.n) {
      return fail(err, "--point must have " + std::to_string(mpec.ge.n) + " entries");
    }
    const Vector x = to_vector(args.point);
    const OracleOutput o = pseudogradient(mpec, x);

    json report;
    report["problem"] = lp.id;
    report["point"] = to_json(x);
    report["value"] = o.value;
    report["xi"] = to_json(o.xi);
    report["y"] = to_json(o.lower.y);
    report["stationarity_residual"] = stationarity_residual(mpec.admissible, x, o.xi);
    if (args.fd_audit > 0) {
      const auto box = box_bounds(mpec.admissible);
      if (!box) return fail(err, "finite-difference audit needs a box-shaped U_ad");
      FdAuditOptions fo;
      fo.samples = args.fd_audit;
      fo.seed = args.seed;
      const FdAuditResult fd = finite_difference_audit(mpec, box->first, box->second, fo);
      report["fd_audit"] = {{"samples", fd.samples}, {"passed", fd.passed}, {"kinks", fd.kinks},
                            {"failures", fd.failures}, {"worst", fd.worst}, {"seed", args.seed}};
    }
    out << report.dump(2) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::max_iterations_exceeded ? kExitMaxIter : kExitError;
  } catch (const std::exception& e) {
    return fail(err, e.what());
  }
}

}  // namespace mpecbt::cli
