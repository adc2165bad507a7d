// SPDX-License-Identifier: MIT
//
// mechlab command line: density specs in, machine-readable reports out.
//
// Exit codes: 0 = success (all requested conditions hold), 1 = analysis
// negative (a condition fails, a solver stalls), 2 = usage error (malformed
// flags, specs, or caps exceeded). Reports are byte-identical across runs
// with the same configuration.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mechlab/density.hpp"
#include "mechlab/errors.hpp"
#include "mechlab/lp.hpp"
#include "mechlab/mechanism.hpp"
#include "mechlab/optimizer.hpp"
#include "mechlab/phi.hpp"
#include "mechlab/report.hpp"

namespace {

using nlohmann::json;

struct DensityArgs {
  std::string family;
  std::string density_file;
  double a{1.0};
  std::vector<std::string> params;
};

void add_density_flags(CLI::App* cmd, DensityArgs* args) {
  auto* fam = cmd->add_option(
      "--family", args->family,
      "built-in family: uniform, uniform-imv, ordered-dec, ordered-inc, "
      "scale-invariant, conditional, example3");
  cmd->add_option("--a", args->a, "triangle slope parameter a > 0")
      ->capture_default_str();
  cmd->add_option("--params", args->params,
                  "base-density parameters as k=v pairs "
                  "(g=uniform-power|trunc-exp|beta with alpha=, lambda=, "
                  "beta=; suffixes 1/2 address the conditional family's g1, "
                  "g2)");
  auto* file = cmd->add_option("--density-file", args->density_file,
                               "density spec JSON path (see README)");
  fam->excludes(file);
  file->excludes(fam);
}

std::map<std::string, std::string> parse_params(
    const std::vector<std::string>& kvs) {
  std::map<std::string, std::string> out;
  for (const auto& kv : kvs) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw mechlab::InvalidInputError("bad --params entry '" + kv +
                                       "', expected key=value");
    }
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

std::string str_param(const std::map<std::string, std::string>& params,
                      const std::string& key, const std::string& fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double num_param(const std::map<std::string, std::string>& params,
                 const std::string& key, double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(it->second, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != it->second.size()) {
    throw mechlab::InvalidInputError("parameter " + key +
                                     " is not a number: '" + it->second + "'");
  }
  return value;
}

mechlab::BaseDensity make_base(const std::map<std::string, std::string>& params,
                               const std::string& suffix) {
  const std::string fam = str_param(params, "g" + suffix, "uniform-power");
  if (fam == "uniform-power") {
    return mechlab::BaseDensity::uniform_power(
        num_param(params, "alpha" + suffix, 1.0));
  }
  if (fam == "trunc-exp") {
    return mechlab::BaseDensity::truncated_exponential(
        num_param(params, "lambda" + suffix, 1.0));
  }
  if (fam == "beta") {
    return mechlab::BaseDensity::beta(num_param(params, "alpha" + suffix, 2.0),
                                      num_param(params, "beta" + suffix, 1.0));
  }
  throw mechlab::InvalidInputError(
      "unknown base density '" + fam +
      "' (expected uniform-power, trunc-exp, or beta)");
}

mechlab::Density make_density(const DensityArgs& args) {
  using mechlab::Density;
  using mechlab::Orientation;
  if (!args.density_file.empty()) {
    return mechlab::density_from_json_file(args.density_file);
  }
  if (args.family.empty()) {
    throw mechlab::InvalidInputError("provide --family or --density-file");
  }
  const auto params = parse_params(args.params);
  const std::string& f = args.family;
  if (f == "uniform") return Density::uniform_triangle(Orientation::DMV, args.a);
  if (f == "uniform-imv") {
    return Density::uniform_triangle(Orientation::IMV, args.a);
  }
  if (f == "ordered-dec") {
    return Density::ordered_decreasing(make_base(params, ""), args.a);
  }
  if (f == "ordered-inc") {
    return Density::ordered_increasing(make_base(params, ""), args.a);
  }
  if (f == "scale-invariant") {
    return Density::scale_invariant(make_base(params, ""));
  }
  if (f == "conditional") {
    return Density::conditional_decreasing(make_base(params, "1"),
                                           make_base(params, "2"));
  }
  if (f == "example3") return Density::example3_imv();
  throw mechlab::InvalidInputError(
      "unknown family '" + f +
      "' (uniform, uniform-imv, ordered-dec, ordered-inc, scale-invariant, "
      "conditional, example3)");
}

/// MECHLAB_THREADS caps internal parallelism. Every kernel in this build is
/// single-threaded (the problem sizes are tiny), so any positive cap is
/// honored trivially; the variable is still validated and recorded.
int thread_cap() {
  const char* env = std::getenv("MECHLAB_THREADS");
  if (env == nullptr) return 1;
  const std::string text(env);
  std::size_t pos = 0;
  long value = 0;
  try {
    value = std::stol(text, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != text.size() || value < 1) {
    throw mechlab::InvalidInputError(
        "MECHLAB_THREADS must be a positive integer, got '" + text + "'");
  }
  return static_cast<int>(value);
}

json base_config(const DensityArgs& args, const mechlab::Density& density,
                 const std::string& format) {
  json cfg;
  if (!args.family.empty()) cfg["family"] = args.family;
  if (!args.density_file.empty()) cfg["density_file"] = args.density_file;
  cfg["a"] = args.a;
  json params = json::object();
  for (const auto& [k, v] : parse_params(args.params)) params[k] = v;
  cfg["params"] = params;
  cfg["density"] = density.describe();
  cfg["format"] = format;
  if (std::getenv("MECHLAB_THREADS") != nullptr) {
    cfg["threads"] = thread_cap();
  }
  return cfg;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(out_path, std::ios::binary);
  if (!file) {
    throw mechlab::InvalidInputError("cannot open output file: " + out_path);
  }
  file << text;
}

void require_json(const std::string& format, const std::string& command) {
  if (format != "json") {
    throw mechlab::InvalidInputError(
        command + " only emits json (csv is for sweep and phi-dump)");
  }
}

std::vector<std::string> split_csv_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (const char c : text) {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

int run_sc_check(const DensityArgs& dargs, const std::string& conditions,
                 int n, double tol, const std::string& out,
                 const std::string& format) {
  require_json(format, "sc-check");
  const mechlab::Density density = make_density(dargs);
  const std::vector<std::string> names = split_csv_list(conditions);
  if (names.empty()) {
    throw mechlab::InvalidInputError("--conditions selected nothing");
  }
  const mechlab::PhiEvaluator ev(density);
  json conds = json::array();
  bool all_hold = true;
  for (const auto& name : names) {
    mechlab::CheckResult r;
    if (name == "sch") {
      r = mechlab::check_sch(ev, n, tol);
    } else if (name == "scv") {
      r = mechlab::check_scv(ev, n, tol);
    } else if (name == "scd") {
      r = mechlab::check_scd(ev, n, tol);
    } else {
      throw mechlab::InvalidInputError("unknown condition '" + name +
                                       "' (sch, scv, scd)");
    }
    all_hold = all_hold && r.verdict == mechlab::Verdict::Holds;
    conds.push_back(mechlab::report::to_json(r, name));
  }
  json cfg = base_config(dargs, density, format);
  cfg["n"] = n;
  cfg["tol"] = tol;
  cfg["conditions"] = conditions;
  const json result = {{"conditions", conds}, {"all_hold", all_hold}};
  emit(mechlab::report::render("sc-check", cfg, result), out);
  return all_hold ? 0 : 1;
}

int run_optimize(const DensityArgs& dargs, const std::string& out,
                 const std::string& format) {
  require_json(format, "optimize");
  const mechlab::Density density = make_density(dargs);
  const mechlab::OptResult res = mechlab::optimize_deterministic(density);
  const json cfg = base_config(dargs, density, format);
  emit(mechlab::report::render("optimize", cfg, mechlab::report::to_json(res)),
       out);
  return 0;
}

int run_lp_verify(const DensityArgs& dargs, int n, const std::string& out,
                  const std::string& format) {
  require_json(format, "lp-verify");
  const mechlab::Density density = make_density(dargs);
  const mechlab::GapResult gap = mechlab::deterministic_gap(density, n);
  json cfg = base_config(dargs, density, format);
  cfg["n"] = n;
  json result = mechlab::report::to_json(gap);
  result["n"] = n;
  emit(mechlab::report::render("lp-verify", cfg, result), out);
  return 0;
}

int run_imv_bundle(const DensityArgs& dargs, const std::string& out,
                   const std::string& format) {
  require_json(format, "imv-bundle");
  const mechlab::Density density = make_density(dargs);
  const mechlab::BundleResult res = mechlab::imv_bundle_price(density);
  const json cfg = base_config(dargs, density, format);
  emit(mechlab::report::render("imv-bundle", cfg, mechlab::report::to_json(res)),
       out);
  return 0;
}

int run_sweep(const DensityArgs& dargs, const std::string& param, double from,
              double to, int n, const std::string& out,
              const std::string& format) {
  if (param != "a") {
    throw mechlab::InvalidInputError("only --param a is supported");
  }
  if (!dargs.density_file.empty()) {
    throw mechlab::InvalidInputError("sweep uses --family, not --density-file");
  }
  const std::string& f = dargs.family;
  if (f != "uniform" && f != "uniform-imv" && f != "ordered-dec" &&
      f != "ordered-inc") {
    throw mechlab::InvalidInputError("family '" + f +
                                     "' has no slope parameter a to sweep");
  }
  const auto rows = mechlab::sweep(
      [&](double a) {
        DensityArgs d = dargs;
        d.a = a;
        return make_density(d);
      },
      from, to, n);
  if (format == "csv") {
    std::string text = "# mechlab " + mechlab::report::version() +
                       " sweep family=" + f + " param=" + param + " from=" +
                       mechlab::report::format_double(from) + " to=" +
                       mechlab::report::format_double(to) + " n=" +
                       std::to_string(n) + "\n";
    text += mechlab::report::sweep_csv(rows);
    emit(text, out);
  } else {
    DensityArgs first = dargs;
    first.a = from;
    json cfg = base_config(first, make_density(first), format);
    cfg["param"] = param;
    cfg["from"] = from;
    cfg["to"] = to;
    cfg["n"] = n;
    cfg.erase("a");  // swept, not fixed
    emit(mechlab::report::render("sweep", cfg, mechlab::report::to_json(rows)),
         out);
  }
  return 0;
}

int run_phi_dump(const DensityArgs& dargs, int n, const std::string& out,
                 const std::string& format) {
  const mechlab::Density density = make_density(dargs);
  const mechlab::PhiEvaluator ev(density);
  const double a = density.domain().a;
  std::vector<std::array<double, 3>> rows;
  for (int j = 0; j < n; ++j) {
    const double v2 = a * j / (n - 1.0);
    const double lo = v2 / a;
    if (1.0 - lo < 1e-14) {
      rows.push_back({1.0, v2, ev(1.0, v2)});
      continue;
    }
    for (int i = 0; i < n; ++i) {
      const double v1 = lo + (1.0 - lo) * i / (n - 1.0);
      rows.push_back({v1, v2, ev(v1, v2)});
    }
  }
  if (format == "csv") {
    std::string text = "# mechlab " + mechlab::report::version() +
                       " phi-dump density=" + density.describe() + " n=" +
                       std::to_string(n) + "\n";
    text += mechlab::report::phi_csv(rows);
    emit(text, out);
  } else {
    json arr = json::array();
    for (const auto& r : rows) {
      arr.push_back({{"v1", r[0]}, {"v2", r[1]}, {"phi", r[2]}});
    }
    json cfg = base_config(dargs, density, format);
    cfg["n"] = n;
    emit(mechlab::report::render("phi-dump", cfg, arr), out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "mechlab: revenue-optimal mechanisms for selling two identical units\n"
      "to a single buyer on triangular type spaces. MECHLAB_THREADS caps\n"
      "internal parallelism."};
  app.require_subcommand(1);

  auto* sc = app.add_subcommand(
      "sc-check", "verify the single-crossing conditions of a density");
  DensityArgs sc_d;
  std::string sc_conditions = "sch,scv,scd";
  int sc_n = 401;
  double sc_tol = 1e-10;
  std::string sc_out, sc_fmt = "json";
  add_density_flags(sc, &sc_d);
  sc->add_option("--conditions", sc_conditions, "comma list out of sch,scv,scd")
      ->capture_default_str();
  sc->add_option("--n", sc_n, "check grid resolution")
      ->check(CLI::Range(2, 5001))
      ->capture_default_str();
  sc->add_option("--tol", sc_tol, "violation tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sc->add_option("--out", sc_out, "output path (default stdout)");
  sc->add_option("--format", sc_fmt, "output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* opt = app.add_subcommand(
      "optimize", "search the revenue-optimal deterministic price pair");
  DensityArgs opt_d;
  std::string opt_out, opt_fmt = "json";
  add_density_flags(opt, &opt_d);
  opt->add_option("--out", opt_out, "output path (default stdout)");
  opt->add_option("--format", opt_fmt, "output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* lpv = app.add_subcommand(
      "lp-verify",
      "bound the loss of the best deterministic mechanism against the exact "
      "LP over all IC/IR random mechanisms on a type grid");
  DensityArgs lpv_d;
  int lpv_n = 15;
  std::string lpv_out, lpv_fmt = "json";
  add_density_flags(lpv, &lpv_d);
  lpv->add_option("--n", lpv_n, "type grid resolution (2..25)")
      ->capture_default_str();
  lpv->add_option("--out", lpv_out, "output path (default stdout)");
  lpv->add_option("--format", lpv_fmt, "output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* swp = app.add_subcommand(
      "sweep", "optimize over an equally spaced parameter range");
  DensityArgs swp_d;
  std::string swp_param = "a";
  double swp_from = 0.0, swp_to = 0.0;
  int swp_n = 31;
  std::string swp_out, swp_fmt = "csv";
  add_density_flags(swp, &swp_d);
  swp->add_option("--param", swp_param, "parameter to sweep (only: a)")
      ->capture_default_str();
  swp->add_option("--from", swp_from, "range start")->required();
  swp->add_option("--to", swp_to, "range end")->required();
  swp->add_option("--n", swp_n, "number of samples (>= 2)")
      ->capture_default_str();
  swp->add_option("--out", swp_out, "output path (default stdout)");
  swp->add_option("--format", swp_fmt, "output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* imv = app.add_subcommand(
      "imv-bundle", "solve the optimal bundle price fixed point (IMV)");
  DensityArgs imv_d;
  std::string imv_out, imv_fmt = "json";
  add_density_flags(imv, &imv_d);
  imv->add_option("--out", imv_out, "output path (default stdout)");
  imv->add_option("--format", imv_fmt, "output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  auto* phd = app.add_subcommand(
      "phi-dump", "tabulate the guidepost function on the triangle");
  DensityArgs phd_d;
  int phd_n = 101;
  std::string phd_out, phd_fmt = "csv";
  add_density_flags(phd, &phd_d);
  phd->add_option("--n", phd_n, "lattice resolution per axis")
      ->check(CLI::Range(2, 2001))
      ->capture_default_str();
  phd->add_option("--out", phd_out, "output path (default stdout)");
  phd->add_option("--format", phd_fmt, "output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    thread_cap();  // validate MECHLAB_THREADS even when unused
    if (sc->parsed()) {
      return run_sc_check(sc_d, sc_conditions, sc_n, sc_tol, sc_out, sc_fmt);
    }
    if (opt->parsed()) return run_optimize(opt_d, opt_out, opt_fmt);
    if (lpv->parsed()) return run_lp_verify(lpv_d, lpv_n, lpv_out, lpv_fmt);
    if (swp->parsed()) {
      return run_sweep(swp_d, swp_param, swp_from, swp_to, swp_n, swp_out,
                       swp_fmt);
    }
    if (imv->parsed()) return run_imv_bundle(imv_d, imv_out, imv_fmt);
    if (phd->parsed()) return run_phi_dump(phd_d, phd_n, phd_out, phd_fmt);
    std::cerr << "error: no command selected\n";
    return 2;
  } catch (const mechlab::InvalidInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mechlab::WrongOrientationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mechlab::GridTooLargeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mechlab::OnBoundaryError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mechlab::BadCutError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const mechlab::Error& e) {
    std::cerr << "analysis failed: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
