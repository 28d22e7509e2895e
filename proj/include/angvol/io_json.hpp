#ifndef ANGVOL_IO_JSON_HPP
#define ANGVOL_IO_JSON_HPP

// JSON views of the library's results. Doubles are written with full
// round-trip precision by nlohmann::json; rationals as "p/q" strings.

#include "angvol/normal_surfaces.hpp"
#include "angvol/outcomes.hpp"
#include "angvol/triangulation.hpp"
#include "angvol/volume.hpp"
#include "angvol/z2_taut.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace angvol::json {

using nlohmann::ordered_json;

inline ordered_json rationals(const RationalVector& v)
{
  ordered_json a = ordered_json::array();
  for (const auto& r : v) a.push_back(to_string(r));
  return a;
}

inline ordered_json triangulation(const Triangulation& tri)
{
  ordered_json j;
  j["tets"] = tri.num_tets();
  ordered_json glue = ordered_json::array();
  for (std::size_t t = 0; t < tri.num_tets(); ++t)
    for (int f = 0; f < 4; ++f) {
      const auto& g = tri.gluing(t, f);
      glue.push_back({{"tet", t}, {"face", f}, {"to_tet", g.tet}, {"to_face", g.face}, {"perm", g.perm.str()}});
    }
  j["gluings"] = glue;
  ordered_json edges = ordered_json::array();
  for (const auto& e : tri.edge_classes()) {
    ordered_json m = ordered_json::array();
    for (const auto& te : e.members) m.push_back({te.tet, te.edge});
    edges.push_back({{"degree", e.degree()}, {"members", m}});
  }
  j["edges"] = edges;
  ordered_json verts = ordered_json::array();
  for (std::size_t t = 0; t < tri.num_tets(); ++t) {
    ordered_json row = ordered_json::array();
    for (int v = 0; v < 4; ++v) row.push_back(tri.vertex_class(t, v));
    verts.push_back(row);
  }
  j["vertex_classes"] = verts;
  ordered_json orient = ordered_json::array();
  for (std::size_t t = 0; t < tri.num_tets(); ++t) orient.push_back(tri.orientation(t));
  j["orientation"] = orient;
  return j;
}

inline ordered_json rigidity(const RigidityReport& r)
{
  ordered_json pairs = ordered_json::array();
  for (const auto& p : r.two_angle_rigid) pairs.push_back({{"q1", p.q1}, {"q2", p.q2}, {"ratio", to_string(p.ratio)}});
  return {{"angle_rigid", r.angle_rigid}, {"two_angle_rigid", pairs}};
}

inline ordered_json thurston(const ThurstonSolution& s)
{
  ordered_json z = ordered_json::array();
  for (const auto& c : s.z) z.push_back({c.real(), c.imag()});
  return z;
}

inline ordered_json residuals(const ThurstonResiduals& r)
{
  return {{"shape_relation", r.shape_relation},   {"tet_product", r.tet_product},
          {"edge_squares", r.edge_squares},       {"edge_signs", r.edge_signs},
          {"edge_sign_residual", r.edge_sign_residual}, {"real_solution", r.real_solution}};
}

inline ordered_json certificate(const TwoQuadCertificate& c)
{
  ordered_json j;
  j["q0"] = c.q0;
  j["q1"] = c.q1 ? ordered_json(*c.q1) : ordered_json(nullptr);
  j["lambda"] = c.lambda ? ordered_json(to_string(*c.lambda)) : ordered_json(nullptr);
  j["alternates"] = c.alternates;
  j["t_coords"] = rationals(c.y.tri);
  j["q_coords"] = rationals(c.y.quad);
  return j;
}

inline ordered_json cluster(const Cluster& c)
{
  ordered_json certs = ordered_json::array();
  for (const auto& x : c.certificates) certs.push_back(certificate(x));
  return {{"tet", c.tet}, {"certificates", certs}};
}

inline ordered_json z2(const Z2Taut& f)
{
  ordered_json m = ordered_json::object();
  for (std::size_t t = 0; t < f.choice.size(); ++t) m[std::to_string(t)] = f.choice[t];
  return m;
}

inline ordered_json z2_result(const Z2Result& r)
{
  ordered_json list = ordered_json::array();
  for (const auto& s : r.solutions) list.push_back(z2(s));
  return {{"status", r.status == Z2Status::complete ? "complete" : "budget_exhausted"}, {"nodes", r.nodes}, {"solutions", list}};
}

inline ordered_json trace_entry(const TraceEntry& e)
{
  return {{"run", e.run},       {"iter", e.iter},   {"move", e.move},           {"volume", e.volume},
          {"delta", e.delta},   {"step", e.step},   {"grad_norm", e.grad_norm}};
}

inline ordered_json critical_report(const CriticalReport& r)
{
  ordered_json j;
  j["classification"] = to_string(r.classification);
  j["label"] = "best found";
  j["volume"] = r.volume;
  j["theta"] = r.point.theta;
  j["flat_quads"] = r.flats.flat_quads;
  j["partially_flat_set"] = r.flats.partially_flat_set;
  j["flat_tets"] = r.flats.flat_tets;
  j["partially_flat_tets"] = r.flats.partially_flat_tets;
  j["q0"] = r.q0 ? ordered_json(*r.q0) : ordered_json(nullptr);
  j["run"] = r.run;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["stop_reason"] = r.stop_reason;
  if (r.classification == Classification::smooth) {
    j["gradient_residual"] = r.gradient_residual;
  } else {
    j["log_coefficient_identity"] = r.log_coefficient_identity;
    j["subderivative_residual"] = r.subderivative_residual;
  }
  return j;
}

}  // namespace angvol::json

#endif  // ANGVOL_IO_JSON_HPP
