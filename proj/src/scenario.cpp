#include "geodiff/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "geodiff/generators.hpp"
#include "geodiff/verify.hpp"

namespace geodiff {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) { throw ConfigError(field + ": " + what); }

const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

double number(const json& j, const std::string& key, const std::string& field, double def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number()) bad(field + key, "expected a number");
  return v->get<double>();
}

int integer(const json& j, const std::string& key, const std::string& field, int def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_number_integer()) bad(field + key, "expected an integer");
  return v->get<int>();
}

bool boolean(const json& j, const std::string& key, const std::string& field, bool def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_boolean()) bad(field + key, "expected true or false");
  return v->get<bool>();
}

std::string text(const json& j, const std::string& key, const std::string& field, const std::string& def) {
  const json* v = find(j, key);
  if (!v) return def;
  if (!v->is_string()) bad(field + key, "expected a string");
  return v->get<std::string>();
}

const json& required(const json& j, const std::string& key, const std::string& field) {
  const json* v = find(j, key);
  if (!v) bad(field + key, "missing");
  return *v;
}

Vec3 vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) bad(field, "expected an array of 3 numbers");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) bad(field, "expected an array of 3 numbers");
    v[k] = j[k].get<double>();
  }
  return v;
}

SurfacePoint parse_point(const json& j, const TriangleMesh& m, const std::string& field) {
  if (!j.is_object()) bad(field, "expected an object with face/w, vertex, direction or position");
  if (find(j, "face")) {
    const int f = integer(j, "face", field + ".", -1);
    if (f < 0 || f >= m.num_faces()) bad(field + ".face", "face " + std::to_string(f) + " out of range");
    Vec3 w = vec3(required(j, "w", field + "."), field + ".w");
    if (w.minCoeff() < 0 || !(w.sum() > 0)) bad(field + ".w", "weights must be non-negative with a positive sum");
    return SurfacePoint{f, w / w.sum()};
  }
  if (find(j, "vertex")) {
    const int v = integer(j, "vertex", field + ".", -1);
    if (v < 0 || v >= m.num_vertices()) bad(field + ".vertex", "vertex " + std::to_string(v) + " out of range");
    return vertex_point(m, v);
  }
  if (find(j, "direction")) {
    Vec3 d = vec3(j["direction"], field + ".direction");
    if (!(d.norm() > 0)) bad(field + ".direction", "zero direction");
    return locate_direction(m, d);
  }
  if (find(j, "position")) return closest_point(m, vec3(j["position"], field + ".position"));
  bad(field, "expected one of face/w, vertex, direction, position");
}

// Area-weighted random points a little inside their faces.
std::vector<SurfacePoint> random_points(const TriangleMesh& m, int n, unsigned seed) {
  std::vector<double> area(m.num_faces());
  for (int f = 0; f < m.num_faces(); ++f) area[f] = m.face_area(f);
  std::mt19937 rng(seed);
  std::discrete_distribution<int> face(area.begin(), area.end());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SurfacePoint> out;
  while (static_cast<int>(out.size()) < n) {
    const int f = face(rng);
    double a = u(rng), b = u(rng);
    if (a + b > 1) a = 1 - a, b = 1 - b;
    Vec3 w(1 - a - b, a, b);
    if (w.minCoeff() > 0.02) out.push_back({f, w});
  }
  return out;
}

std::vector<SurfacePoint> parse_points(const json& doc, const std::string& key, const TriangleMesh& m) {
  const json& j = required(doc, key, "");
  if (j.is_object()) {
    const int n = integer(j, "random", key + ".", -1);
    if (n < 1) bad(key + ".random", "expected a positive count");
    return random_points(m, n, static_cast<unsigned>(integer(j, "seed", key + ".", 1)));
  }
  if (!j.is_array()) bad(key, "expected an array of points or {\"random\": n, \"seed\": s}");
  std::vector<SurfacePoint> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(parse_point(j[i], m, key + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> index_list(const json& doc, const std::string& key, int limit) {
  std::vector<int> out;
  const json* j = find(doc, key);
  if (!j) return out;
  if (!j->is_array()) bad(key, "expected an array of indices");
  for (size_t i = 0; i < j->size(); ++i) {
    const json& v = (*j)[i];
    if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() >= limit)
      bad(key + "[" + std::to_string(i) + "]", "index out of range [0, " + std::to_string(limit) + ")");
    out.push_back(v.get<int>());
  }
  return out;
}

std::vector<char> flags(const std::vector<int>& idx, int n) {
  std::vector<char> f(n, 0);
  for (int i : idx) f[i] = 1;
  return f;
}

std::vector<Spring> parse_springs(const json& doc, int np) {
  std::vector<Spring> out;
  const json* j = find(doc, "springs");
  if (!j) return out;
  if (!j->is_array()) bad("springs", "expected an array");
  for (size_t k = 0; k < j->size(); ++k) {
    const std::string f = "springs[" + std::to_string(k) + "].";
    const json& s = (*j)[k];
    if (!s.is_object()) bad(f.substr(0, f.size() - 1), "expected an object {i, j, rest, stiffness}");
    Spring sp;
    sp.i = integer(s, "i", f, -1);
    sp.j = integer(s, "j", f, -1);
    if (sp.i < 0 || sp.i >= np) bad(f + "i", "point index out of range");
    if (sp.j < 0 || sp.j >= np || sp.j == sp.i) bad(f + "j", "point index out of range or equal to i");
    sp.rest = number(s, "rest", f, 0.0);
    sp.stiffness = number(s, "stiffness", f, 1.0);
    if (sp.rest < 0) bad(f + "rest", "must be non-negative");
    if (!(sp.stiffness > 0)) bad(f + "stiffness", "must be positive");
    out.push_back(sp);
  }
  return out;
}

std::vector<std::array<int, 3>> parse_triangles(const json& doc, int np) {
  std::vector<std::array<int, 3>> out;
  const json* j = find(doc, "triangles");
  if (!j) return out;
  if (!j->is_array()) bad("triangles", "expected an array of index triples");
  for (size_t k = 0; k < j->size(); ++k) {
    const std::string f = "triangles[" + std::to_string(k) + "]";
    const json& t = (*j)[k];
    if (!t.is_array() || t.size() != 3) bad(f, "expected 3 point indices");
    std::array<int, 3> tri{};
    for (int c = 0; c < 3; ++c) {
      if (!t[c].is_number_integer() || t[c].get<int>() < 0 || t[c].get<int>() >= np) bad(f, "point index out of range");
      tri[c] = t[c].get<int>();
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) bad(f, "repeated point index");
    out.push_back(tri);
  }
  return out;
}

Material parse_material(const json& doc, const std::string& field) {
  Material m;
  const json* j = find(doc, "material");
  if (!j) return m;
  if (!j->is_object()) bad(field + "material", "expected {mu, lambda}");
  m.mu = number(*j, "mu", field + "material.", m.mu);
  m.lambda = number(*j, "lambda", field + "material.", m.lambda);
  if (!(m.mu > 0) || m.lambda < 0) bad(field + "material", "need mu > 0 and lambda >= 0");
  return m;
}

// Rest shapes from the geodesic edge lengths at the initial points.
std::vector<MembraneElement> rest_elements(const GeodesicEngine& eng, const std::vector<SurfacePoint>& pts,
                                           const std::vector<std::array<int, 3>>& tris, double scale) {
  std::vector<MembraneElement> out;
  for (size_t k = 0; k < tris.size(); ++k) {
    const auto& t = tris[k];
    auto g = [&](int a, int b) { return scale * eng.shortest(pts[t[a]], pts[t[b]]).length; };
    try {
      out.push_back(element_from_lengths(t, g(0, 1), g(1, 2), g(2, 0)));
    } catch (const EnergyError& e) {
      bad("triangles[" + std::to_string(k) + "]", e.what());
    }
  }
  return out;
}

void add_pair(std::vector<std::array<int, 2>>& pairs, int a, int b) {
  std::array<int, 2> p{std::min(a, b), std::max(a, b)};
  if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json point_json(const TriangleMesh& m, const SurfacePoint& p) {
  const Vec3 x = embed(m, p);
  return {{"face", p.face}, {"w", {p.w[0], p.w[1], p.w[2]}}, {"position", {x[0], x[1], x[2]}}};
}

std::vector<std::vector<Vec3>> gvd_lines(const TriangleMesh& m, const VoronoiDiagram& d) {
  std::vector<std::vector<Vec3>> out;
  for (const auto& s : d.segments) out.push_back({embed(m, d.nodes[s.a].x), embed(m, d.nodes[s.b].x)});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Loading

Scenario parse_scenario(const json& doc, const fs::path& base_dir, const std::string& stem) {
  if (!doc.is_object()) bad("scenario", "expected a JSON object");
  Scenario sc;
  sc.doc = doc;
  sc.base_dir = base_dir;
  sc.mesh = text(doc, "mesh", "", "");
  if (sc.mesh.empty()) bad("mesh", "missing");
  sc.normalize = boolean(doc, "normalize", "", false);
  sc.kind = text(doc, "kind", "", "");
  if (sc.kind != "network" && sc.kind != "karcher" && sc.kind != "membrane" && sc.kind != "coupled" &&
      sc.kind != "gvd")
    bad("kind", "expected network, karcher, membrane, coupled or gvd (got '" + sc.kind + "')");

  if (const json* s = find(doc, "solver")) {
    if (!s->is_object()) bad("solver", "expected an object");
    try {
      sc.solver.method = parse_method(text(*s, "method", "solver.", sc.kind == "gvd" ? "lbfgs" : "newton"));
    } catch (const SolverError& e) {
      bad("solver.method", e.what());
    }
    sc.solver.tolerance = number(*s, "tolerance", "solver.", sc.solver.tolerance);
    sc.solver.max_iterations = integer(*s, "max_iterations", "solver.", sc.solver.max_iterations);
    sc.solver.lbfgs_memory = integer(*s, "lbfgs_memory", "solver.", sc.solver.lbfgs_memory);
    if (!(sc.solver.tolerance > 0)) bad("solver.tolerance", "must be positive");
    if (sc.solver.max_iterations < 0) bad("solver.max_iterations", "must be non-negative");
    if (sc.solver.lbfgs_memory < 1) bad("solver.lbfgs_memory", "must be at least 1");
  } else if (sc.kind == "gvd") {
    sc.solver.method = Method::LBFGS;
  }
  if (sc.kind == "gvd" && sc.solver.method == Method::Newton)
    bad("solver.method", "the Voronoi objective has no Hessian; use lbfgs or gd");

  if (const json* g = find(doc, "geodesic")) {
    if (!g->is_object()) bad("geodesic", "expected an object");
    sc.geodesic.mollifier.enabled = boolean(*g, "mollifier", "geodesic.", true);
    sc.geodesic.steiner_points = integer(*g, "steiner_points", "geodesic.", sc.geodesic.steiner_points);
    sc.geodesic.via_candidates = integer(*g, "via_candidates", "geodesic.", sc.geodesic.via_candidates);
    if (sc.geodesic.steiner_points < 0) bad("geodesic.steiner_points", "must be non-negative");
  }
  sc.output_dir = base_dir / text(doc, "output", "", stem + "_out");
  return sc;
}

Scenario load_scenario(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open scenario " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": invalid JSON (" + e.what() + ")");
  }
  Scenario sc = parse_scenario(doc, file.parent_path(), file.stem().string());
  sc.file = file;
  return sc;
}

TriangleMesh load_scenario_mesh(const Scenario& sc) {
  const std::string prefix = "generate:";
  TriangleMesh m;
  if (sc.mesh.rfind(prefix, 0) == 0) {
    try {
      m = make_named_mesh(sc.mesh.substr(prefix.size()));
    } catch (const ConfigError& e) {
      bad("mesh", e.what());
    }
  } else {
    const fs::path p = sc.base_dir / sc.mesh;
    if (!fs::exists(p)) bad("mesh", "file not found: " + p.string());
    try {
      m = load_obj(p.string());
    } catch (const MeshError& e) {
      bad("mesh", p.string() + ": " + e.what());
    }
  }
  if (sc.normalize) m.normalize();
  return m;
}

// ---------------------------------------------------------------------------
// Problems

ProblemSetup build_problem(const Scenario& sc, const TriangleMesh& mesh) {
  const json& doc = sc.doc;
  ProblemSetup out;
  out.problem = std::make_unique<EnergyProblem>(mesh, sc.geodesic);
  EnergyProblem& prob = *out.problem;
  GeodesicEngine eng(mesh, sc.geodesic);

  if (sc.kind == "karcher") {
    std::vector<SurfacePoint> anchors = parse_points(doc, "anchors", mesh);
    if (anchors.empty()) bad("anchors", "need at least one anchor");
    const int n = static_cast<int>(anchors.size());
    SurfacePoint start;
    if (const json* j = find(doc, "initial")) {
      start = parse_point(*j, mesh, "initial");
    } else {
      // best anchor
      double best = std::numeric_limits<double>::infinity();
      for (const auto& a : anchors) {
        double e = 0;
        for (const auto& b : anchors) e += std::pow(eng.shortest(a, b).length, 2);
        if (e < best) best = e, start = a;
      }
    }
    std::vector<SurfacePoint> pts{start};
    pts.insert(pts.end(), anchors.begin(), anchors.end());
    prob.add(karcher_term(n));
    std::vector<char> fixed(n + 1, 1);
    fixed[0] = 0;
    prob.set_layout(n + 1, fixed);
    out.initial = prob.initial_state(pts);
    for (int i = 1; i <= n; ++i) add_pair(out.pairs, 0, i);
    return out;
  }

  std::vector<SurfacePoint> pts = parse_points(doc, "points", mesh);
  const int np = static_cast<int>(pts.size());
  if (np == 0) bad("points", "need at least one point");
  std::vector<int> fixed = index_list(doc, "fixed", np);

  std::vector<Spring> springs = parse_springs(doc, np);
  std::vector<std::array<int, 3>> tris = parse_triangles(doc, np);
  if (sc.kind == "network" && springs.empty()) bad("springs", "a network needs at least one spring");
  if (sc.kind == "membrane" && tris.empty()) bad("triangles", "a membrane needs at least one triangle");
  if (sc.kind == "coupled" && springs.empty() && tris.empty())
    bad("springs", "a coupled scenario needs springs or triangles");
  if (sc.kind != "network" && sc.kind != "coupled" && !springs.empty()) bad("springs", "not used by kind " + sc.kind);

  if (!springs.empty()) {
    prob.add(std::make_shared<SpringNetwork>(springs, boolean(doc, "euclidean", "", false)));
    for (const auto& s : springs) add_pair(out.pairs, s.i, s.j);
  }
  if (!tris.empty()) {
    const double scale = number(doc, "rest_scale", "", 1.0);
    if (!(scale > 0)) bad("rest_scale", "must be positive");
    prob.add(std::make_shared<GeodesicMembrane>(rest_elements(eng, pts, tris, scale), parse_material(doc, "")));
    for (const auto& t : tris)
      for (int k = 0; k < 3; ++k) add_pair(out.pairs, t[k], t[(k + 1) % 3]);
  }

  if (sc.kind == "coupled") {
    const json& h = required(doc, "host", "");
    if (!h.is_object()) bad("host", "expected an object");
    HostModel hm;
    hm.material = parse_material(h, "host.");
    hm.volume_weight = number(h, "volume_weight", "host.", 0.0);
    if (hm.volume_weight < 0) bad("host.volume_weight", "must be non-negative");
    hm.rest_volume = number(h, "rest_volume_scale", "host.", 1.0) * enclosed_volume(mesh);
    std::vector<int> hf = index_list(h, "fixed_vertices", mesh.num_vertices());
    prob.add(std::make_shared<HostEnergy>(mesh, hm));
    prob.set_layout(np, flags(fixed, np), true, flags(hf, mesh.num_vertices()));
  } else {
    prob.set_layout(np, flags(fixed, np));
  }
  out.initial = prob.initial_state(pts);
  return out;
}

GvdSetup build_gvd(const Scenario& sc, const TriangleMesh& mesh) {
  GvdSetup g;
  g.sites = parse_points(sc.doc, "sites", mesh);
  if (g.sites.size() < 2) bad("sites", "need >= 2 sites");
  try {
    g.objective.kind = parse_gvd_objective(text(sc.doc, "objective", "", "uniformity"));
  } catch (const GvdError& e) {
    bad("objective", e.what());
  }
  g.objective.target_length = number(sc.doc, "target_length", "", g.objective.target_length);
  if (!(g.objective.target_length > 0)) bad("target_length", "must be positive");
  g.options.tol_eq = number(sc.doc, "tol_eq", "", g.options.tol_eq);
  return g;
}

// ---------------------------------------------------------------------------
// Running

json to_json(const RunReport& r) {
  return {{"kind", r.kind},         {"status", r.status},   {"energy", r.energy},
          {"grad_norm", r.grad_norm}, {"iterations", r.iterations}, {"seconds", r.seconds},
          {"message", r.message},   {"artifacts", r.artifacts}, {"details", r.details}};
}

RunReport run_scenario(const Scenario& sc, bool write) {
  const auto t0 = std::chrono::steady_clock::now();
  const TriangleMesh mesh = load_scenario_mesh(sc);
  RunReport rep;
  rep.kind = sc.kind;
  std::vector<std::pair<std::string, std::function<void(const fs::path&)>>> exports;

  if (sc.kind == "gvd") {
    GvdSetup g = build_gvd(sc, mesh);
    GeodesicEngine eng(mesh, sc.geodesic);
    try {
      GvdRun run = optimize_sites(mesh, g.sites, g.objective, sc.solver, g.options, sc.geodesic);
      rep.status = to_string(run.solve.status);
      rep.energy = run.solve.energy;
      rep.grad_norm = run.solve.grad_norm;
      rep.iterations = run.solve.iterations;
      rep.message = run.solve.message;
      rep.trace = run.solve.trace;
      rep.details = {{"objective", to_string(g.objective.kind)},
                     {"initial_objective", run.solve.trace.front().energy},
                     {"cells", run.final.num_cells()},
                     {"voronoi_vertices", run.final.vertices.size()},
                     {"arcs", run.final.arcs.size()},
                     {"max_residual", run.final.max_residual()},
                     {"initial_plane_distance", mean_plane_distance(mesh, run.initial)},
                     {"final_plane_distance", mean_plane_distance(mesh, run.final)}};
      exports.push_back({"sites.csv", [&, s = run.solve.state.points](const fs::path& p) { save_points_csv(mesh, s, p); }});
      exports.push_back({"gvd_initial.obj", [&, l = gvd_lines(mesh, run.initial)](const fs::path& p) { save_polylines(l, p); }});
      exports.push_back({"gvd_final.obj", [&, l = gvd_lines(mesh, run.final)](const fs::path& p) { save_polylines(l, p); }});
    } catch (const SolverError& e) {
      rep.status = "error";
      rep.message = e.what();
    } catch (const GvdError& e) {
      rep.status = "error";
      rep.message = e.what();
    }
  } else {
    ProblemSetup ps = build_problem(sc, mesh);
    const EnergyProblem& prob = *ps.problem;
    try {
      const double e0 = prob.evaluate(ps.initial, 0).value;
      SolveResult r = minimize(prob, ps.initial, sc.solver);
      rep.status = to_string(r.status);
      rep.energy = r.energy;
      rep.grad_norm = r.grad_norm;
      rep.iterations = r.iterations;
      rep.message = r.message;
      rep.trace = r.trace;
      rep.details["initial_energy"] = e0;
      const Evaluation fin = prob.evaluate(r.state, 0);
      for (const auto& [name, v] : fin.terms) rep.details["terms"][name] = v;
      const TriangleMesh host = prob.mesh_at(r.state);
      if (sc.kind == "karcher") rep.details["mean"] = point_json(host, r.state.points[0]);
      if (sc.kind == "coupled") {
        rep.details["initial_volume"] = enclosed_volume(mesh);
        rep.details["final_volume"] = enclosed_volume(host);
      }
      GeodesicEngine eng(host, sc.geodesic);
      std::vector<std::vector<Vec3>> lines;
      for (const auto& [a, b] : ps.pairs) lines.push_back(eng.shortest(r.state.points[a], r.state.points[b]).points);
      exports.push_back({"points.csv", [&, s = r.state.points, host](const fs::path& p) { save_points_csv(host, s, p); }});
      exports.push_back({"paths.obj", [lines](const fs::path& p) { save_polylines(lines, p); }});
      if (sc.kind == "coupled") exports.push_back({"host.obj", [host](const fs::path& p) { save_obj(host, p.string()); }});
    } catch (const SolverError& e) {
      rep.status = "error";
      rep.message = e.what();
    } catch (const GeodesicError& e) {
      rep.status = "error";
      rep.message = e.what();
    }
  }
  rep.seconds = seconds_since(t0);

  if (write) {
    std::error_code ec;
    fs::create_directories(sc.output_dir, ec);
    if (ec) throw ConfigError("output: cannot create " + sc.output_dir.string() + " (" + ec.message() + ")");
    {
      const fs::path p = sc.output_dir / "trace.csv";
      std::ofstream out(p);
      write_trace_csv(rep.trace, out);
      rep.artifacts.push_back(p.string());
    }
    for (const auto& [name, fn] : exports) {
      const fs::path p = sc.output_dir / name;
      fn(p);
      rep.artifacts.push_back(p.string());
    }
    const fs::path p = sc.output_dir / "report.json";
    rep.artifacts.push_back(p.string());
    std::ofstream(p) << to_json(rep).dump(2) << '\n';
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Verification

json to_json(const VerifyReport& r) {
  return {{"mode", r.mode},
          {"status", r.status},
          {"max_grad_err", r.max_grad_err},
          {"max_hess_err", r.max_hess_err},
          {"max_oracle_err", r.max_oracle_err},
          {"checks", r.checks},
          {"skipped", r.skipped},
          {"message", r.message}};
}

VerifyReport verify_scenario(const Scenario& sc, const std::string& mode) {
  if (mode != "grad" && mode != "hess" && mode != "oracle") bad("mode", "expected grad, hess or oracle");
  const TriangleMesh mesh = load_scenario_mesh(sc);
  VerifyReport rep;
  rep.mode = mode;
  GeodesicEngine eng(mesh, sc.geodesic);

  std::vector<SurfacePoint> pts;
  std::vector<std::array<int, 2>> pairs;
  ProblemSetup ps;
  GvdSetup gs;
  if (sc.kind == "gvd") {
    gs = build_gvd(sc, mesh);
    pts = gs.sites;
    for (int i = 0; i < static_cast<int>(pts.size()); ++i)
      for (int j = i + 1; j < static_cast<int>(pts.size()); ++j) pairs.push_back({i, j});
  } else {
    ps = build_problem(sc, mesh);
    pts = ps.initial.points;
    pairs = ps.pairs;
  }

  if (mode == "oracle") {
    SteinerGraph oracle(mesh, 16);
    for (const auto& [a, b] : pairs) {
      const double g = eng.shortest(pts[a], pts[b]).length;
      const double o = oracle.distance(mesh, pts[a], pts[b]);
      rep.max_oracle_err = std::max(rep.max_oracle_err, std::abs(g - o));
      if (g > o + 1e-12) rep.message = "geodesic longer than the oracle";
      ++rep.checks;
    }
    rep.status = rep.message.empty() && rep.max_oracle_err <= 2e-3 ? "pass" : "fail";
    return rep;
  }

  if (sc.kind == "gvd") {
    if (mode == "hess") {
      rep.status = "skipped";
      rep.message = "the Voronoi objective is first order";
      return rep;
    }
    VoronoiDiagram d = compute_gvd(eng, gs.sites, gs.options);
    ObjectiveJet j = objective_jet(eng, d, gs.objective);
    GvdOptions fast = gs.options;
    fast.refine_crossings = false;
    const double h = 1e-5, scale = std::max(1.0, j.grad.lpNorm<Eigen::Infinity>());
    for (int k = 0; k < static_cast<int>(j.grad.size()); ++k) {
      double f[2];
      for (int s = 0; s < 2; ++s) {
        std::vector<SurfacePoint> q = gs.sites;
        Vec2 e = Vec2::Zero();
        e[k % 2] = s ? -h : h;
        q[k / 2].w += tangent_basis() * e;
        f[s] = objective_jet(eng, compute_gvd(eng, q, fast), gs.objective, false).value;
      }
      rep.max_grad_err = std::max(rep.max_grad_err, std::abs((f[0] - f[1]) / (2 * h) - j.grad[k]) / scale);
      ++rep.checks;
    }
    rep.status = rep.max_grad_err <= 1e-3 ? "pass" : "fail";
    return rep;
  }

  EnergyCheckOptions opts;
  opts.hessian = mode == "hess";
  if (opts.hessian) {
    // crossings in the mollifier band (or on a vertex without it) are excluded
    const Mollifier& mol = sc.geodesic.mollifier;
    const double band = 10 * (mol.enabled ? mol.eps : 0.0);
    for (const auto& [a, b] : pairs)
      for (double t : eng.shortest(pts[a], pts[b]).t)
        if (std::min(t, 1 - t) <= band) ++rep.skipped;
    if (rep.skipped > 0) {
      rep.status = "skipped";
      rep.message = std::to_string(rep.skipped) + " geodesic crossings lie within 10 eps of a vertex";
      return rep;
    }
  }
  EnergyCheck c = check_energy(*ps.problem, ps.initial, opts);
  rep.checks = c.dofs;
  rep.max_grad_err = c.grad_err;
  rep.max_hess_err = c.hess_err;
  const bool ok = c.grad_err <= 1e-5 && (!opts.hessian || c.hess_err <= 1e-4);
  rep.status = ok ? "pass" : "fail";
  return rep;
}

int exit_code(const std::string& status) {
  return status == "converged" || status == "pass" || status == "skipped" ? 0 : 1;
}

// ---------------------------------------------------------------------------
// Exports

void save_polylines(const std::vector<std::vector<Vec3>>& lines, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(17);
  for (const auto& l : lines)
    for (const auto& p : l) out << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  int base = 1;
  for (const auto& l : lines) {
    out << 'l';
    for (size_t k = 0; k < l.size(); ++k) out << ' ' << base + static_cast<int>(k);
    out << '\n';
    base += static_cast<int>(l.size());
  }
}

std::vector<std::vector<Vec3>> load_polylines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<Vec3> v;
  std::vector<std::vector<Vec3>> lines;
  std::string row;
  int n = 0;
  while (std::getline(in, row)) {
    ++n;
    std::istringstream ss(row);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) throw ConfigError(path.string() + ":" + std::to_string(n) + ": bad vertex");
      v.push_back(p);
    } else if (tag == "l") {
      std::vector<Vec3> l;
      int i;
      while (ss >> i) {
        if (i < 1 || i > static_cast<int>(v.size()))
          throw ConfigError(path.string() + ":" + std::to_string(n) + ": index out of range");
        l.push_back(v[i - 1]);
      }
      lines.push_back(std::move(l));
    }
  }
  return lines;
}

void save_points_csv(const TriangleMesh& mesh, const std::vector<SurfacePoint>& pts, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(17);
  out << "face,w0,w1,w2,x,y,z\n";
  for (const auto& p : pts) {
    const Vec3 x = embed(mesh, p);
    out << p.face << ',' << p.w[0] << ',' << p.w[1] << ',' << p.w[2] << ',' << x[0] << ',' << x[1] << ',' << x[2]
        << '\n';
  }
}

std::vector<SurfacePoint> load_points_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string row;
  std::getline(in, row);
  std::vector<SurfacePoint> out;
  int n = 1;
  while (std::getline(in, row)) {
    ++n;
    if (row.empty()) continue;
    std::replace(row.begin(), row.end(), ',', ' ');
    std::istringstream ss(row);
    SurfacePoint p;
    if (!(ss >> p.face >> p.w[0] >> p.w[1] >> p.w[2]))
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": bad point row");
    out.push_back(p);
  }
  return out;
}

}  // namespace geodiff
