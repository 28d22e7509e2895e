// angvol: triangulation checks, volume maximisation and certificates.
//
// JSON goes to stdout (or --out), diagnostics to stderr.
// Exit codes: 0 success, 2 input, 3 curvature, 4 convergence, 5 budget.

#include "angvol/io_json.hpp"
#include "angvol/normal_surfaces.hpp"
#include "angvol/outcomes.hpp"
#include "angvol/volume.hpp"
#include "angvol/z2_taut.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace {

using angvol::json::ordered_json;

enum Exit { ok = 0, input = 2, curvature = 3, convergence = 4, budget = 5 };

struct Config {
  std::string input;
  std::string curvature;
  std::string out;
  std::string trace;
  std::string mode = "all";
  angvol::OptimizeOptions opt;
  std::optional<std::size_t> q0;
  std::uint64_t budget = 1'000'000;
};

std::string slurp(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw angvol::InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const Config& c, const ordered_json& j)
{
  const std::string text = j.dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(c.out);
    if (!f) throw angvol::InputError("cannot write " + c.out);
    f << text;
  }
}

angvol::CurvatureAssignment load_curvature(const Config& c, const angvol::Triangulation& tri)
{
  if (c.curvature.empty()) return angvol::CurvatureAssignment::trivial(tri);
  return angvol::parse_curvature(slurp(c.curvature), tri);
}

int cmd_check(const Config& c)
{
  const auto tri = angvol::parse_triangulation(slurp(c.input));
  ordered_json j;
  j["V"] = tri.num_vertices();
  j["E"] = tri.num_edges();
  j["F"] = tri.num_faces();
  j["T"] = tri.num_tets();
  j["euler_characteristic"] = tri.euler_characteristic();
  ordered_json links = ordered_json::array();
  for (const auto& l : tri.vertex_links())
    links.push_back({{"vertex", l.vertex_class}, {"euler_characteristic", l.euler_char()}, {"triangles", l.triangles.size()}});
  j["links"] = links;
  std::vector<std::size_t> degrees;
  for (const auto& e : tri.edge_classes()) degrees.push_back(e.degree());
  j["edge_degrees"] = degrees;
  std::map<std::size_t, std::size_t> spectrum;
  for (auto d : degrees) ++spectrum[d];
  ordered_json spec = ordered_json::object();
  for (const auto& [d, n] : spectrum) spec[std::to_string(d)] = n;
  j["degree_spectrum"] = spec;
  j["dimTAS"] = angvol::tas_basis(tri).size();
  j["rigidity"] = angvol::json::rigidity(angvol::rigidity_report(tri));
  emit(c, j);
  return ok;
}

void write_trace(const Config& c, const std::vector<angvol::CriticalReport>& runs)
{
  if (c.trace.empty()) return;
  std::ofstream f(c.trace);
  if (!f) throw angvol::InputError("cannot write " + c.trace);
  for (const auto& r : runs)
    for (const auto& e : r.trace) f << angvol::json::trace_entry(e).dump() << "\n";
}

ordered_json smooth_outputs(const angvol::Triangulation& tri, const angvol::CurvatureAssignment& k, const angvol::CriticalReport& r,
                           double eps_flat)
{
  ordered_json j;
  const auto z = angvol::thurston_from_smooth(tri, r.point, eps_flat);
  j["thurston"] = angvol::json::thurston(z);
  j["residuals"] = angvol::json::residuals(angvol::verify_thurston(tri, z, k));
  try {
    const auto y = angvol::log_sine_vector(tri, r.point, 1e-8, eps_flat);
    j["log_sine"] = {{"y", y.y}, {"lift_residual", y.lift_residual}, {"orthogonality", y.orthogonality}};
  } catch (const angvol::NotCriticalError& e) {
    j["log_sine"] = {{"error", e.what()}};
  }
  return j;
}

int cmd_optimize(const Config& c, bool thurston_only)
{
  const auto tri = angvol::parse_triangulation(slurp(c.input));
  const auto k = load_curvature(c, tri);
  std::vector<angvol::CriticalReport> runs;
  angvol::CriticalReport best;
  try {
    best = angvol::maximize(tri, k, c.opt, &runs);
  } catch (const angvol::ConvergenceError&) {
    write_trace(c, runs);
    throw;
  }
  write_trace(c, runs);
  ordered_json j;
  j["report"] = angvol::json::critical_report(best);
  if (best.classification == angvol::Classification::smooth) {
    const auto s = smooth_outputs(tri, k, best, c.opt.eps_flat);
    for (auto it = s.begin(); it != s.end(); ++it) j[it.key()] = it.value();
  } else if (!thurston_only) {
    try {
      j["certificate"] = angvol::json::certificate(angvol::two_quad_certificate(tri, *best.q0));
    } catch (const angvol::NoCertificateError& e) {
      j["certificate"] = {{"error", e.what()}};
    }
    ordered_json clusters = ordered_json::array();
    for (const auto& cl : angvol::cluster_detect(tri)) clusters.push_back(angvol::json::cluster(cl));
    j["clusters"] = clusters;
  } else {
    j["thurston"] = nullptr;
  }
  emit(c, j);
  return ok;
}

int cmd_certify(const Config& c)
{
  const auto tri = angvol::parse_triangulation(slurp(c.input));
  ordered_json j;
  ordered_json certs = ordered_json::array();
  auto one = [&](std::size_t q) {
    try {
      certs.push_back(angvol::json::certificate(angvol::two_quad_certificate(tri, q)));
    } catch (const angvol::NoCertificateError& e) {
      certs.push_back({{"q0", q}, {"error", e.what()}});
    }
  };
  if (c.q0) {
    if (*c.q0 >= tri.num_quads()) throw angvol::InputError("--q0 out of range");
    one(*c.q0);
  } else {
    for (std::size_t q = 0; q < tri.num_quads(); ++q) one(q);
  }
  j["certificates"] = certs;
  ordered_json clusters = ordered_json::array();
  for (const auto& cl : angvol::cluster_detect(tri)) clusters.push_back(angvol::json::cluster(cl));
  j["clusters"] = clusters;
  emit(c, j);
  return ok;
}

int cmd_z2taut(const Config& c)
{
  const auto tri = angvol::parse_triangulation(slurp(c.input));
  const auto mode = c.mode == "first" ? angvol::Z2Mode::first : angvol::Z2Mode::all;
  const auto r = angvol::solve_z2_taut(tri, mode, c.budget);
  emit(c, angvol::json::z2_result(r));
  if (r.status == angvol::Z2Status::budget_exhausted) {
    std::cerr << "budget exhausted after " << r.nodes << " nodes\n";
    return budget;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Angle structures, volume maximisation and normal surface certificates"};
  app.require_subcommand(1);
  Config c;

  auto common = [&](CLI::App* s) {
    s->add_option("--input", c.input, "Triangulation file")->required()->check(CLI::ExistingFile);
    s->add_option("--out", c.out, "Write JSON here instead of stdout");
  };
  auto optim = [&](CLI::App* s) {
    s->add_option("--curvature", c.curvature, "Curvature file (edge <id> <p>/<q> lines)")->check(CLI::ExistingFile);
    s->add_option("--grad-tol", c.opt.grad_tol, "Projected gradient tolerance")->check(CLI::PositiveNumber);
    s->add_option("--eps-flat", c.opt.eps_flat, "Flatness threshold on |sin theta|")->check(CLI::PositiveNumber);
    s->add_option("--max-iters", c.opt.max_iters, "Iteration cap per run")->check(CLI::PositiveNumber);
    s->add_option("--multistart", c.opt.multistart, "Number of runs")->check(CLI::PositiveNumber);
    s->add_option("--seed", c.opt.seed, "Seed for start perturbations");
    s->add_option("--trace", c.trace, "Write the iteration log here as JSON lines");
  };

  auto* check = app.add_subcommand("check", "Counts, links, degrees and rigidity");
  common(check);
  auto* optimize = app.add_subcommand("optimize", "Maximise volume and report outcomes");
  common(optimize);
  optim(optimize);
  auto* thurston = app.add_subcommand("thurston", "Shape parameters from the volume maximum");
  common(thurston);
  optim(thurston);
  auto* certify = app.add_subcommand("certify", "2-quad-type normal solutions and clusters");
  common(certify);
  certify->add_option("--q0", c.q0, "Single quad index");
  auto* z2 = app.add_subcommand("z2taut", "Z2-taut structures");
  common(z2);
  z2->add_option("--mode", c.mode, "first or all")->check(CLI::IsMember({"first", "all"}));
  z2->add_option("--budget", c.budget, "Search node budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : input;
  }

  try {
    if (*check) return cmd_check(c);
    if (*optimize) return cmd_optimize(c, false);
    if (*thurston) return cmd_optimize(c, true);
    if (*certify) return cmd_certify(c);
    if (*z2) return cmd_z2taut(c);
  } catch (const angvol::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return input;
  } catch (const angvol::CurvatureError& e) {
    std::cerr << "curvature error: " << e.what() << "\n";
    return curvature;
  } catch (const angvol::ConvergenceError& e) {
    std::cerr << e.what() << "\n";
    return convergence;
  } catch (const angvol::LatticeSearchExhausted& e) {
    std::cerr << e.what() << "\n";
    return convergence;
  }
  return input;
}
