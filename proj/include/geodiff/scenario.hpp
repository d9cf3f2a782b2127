#pragma once

#include <filesystem>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "geodiff/energy.hpp"
#include "geodiff/gvd.hpp"
#include "geodiff/solver.hpp"

namespace geodiff {

// A JSON scenario. Paths inside it are relative to the file's directory.
//
//   mesh        path to an OBJ, or "generate:<kind>" for a bundled mesh
//   normalize   center and scale the mesh to unit bounding-box diagonal
//   kind        network | karcher | membrane | coupled | gvd
//   solver      {method, tolerance, max_iterations, lbfgs_memory}
//   geodesic    {mollifier, steiner_points, via_candidates}
//   output      output directory (default "<stem>_out")
//
// Points are given as {"face", "w"}, {"vertex"}, {"direction"} (ray from the
// origin) or {"position"} (closest surface point).
struct Scenario {
  std::filesystem::path file;
  std::filesystem::path base_dir;
  std::string mesh;
  bool normalize = false;
  std::string kind;
  nlohmann::json doc;
  SolverConfig solver;
  GeodesicOptions geodesic;
  std::filesystem::path output_dir;
};

// Throws ConfigError naming the offending field.
Scenario load_scenario(const std::filesystem::path& file);
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                        const std::string& stem = "scenario");
// Throws ConfigError (with the path) when the file is missing or unreadable.
TriangleMesh load_scenario_mesh(const Scenario& sc);

// Energy problem for the non-Voronoi kinds.
struct ProblemSetup {
  std::unique_ptr<EnergyProblem> problem;
  State initial;
  std::vector<std::array<int, 2>> pairs;  // point pairs joined by geodesics
};
ProblemSetup build_problem(const Scenario& sc, const TriangleMesh& mesh);

struct GvdSetup {
  std::vector<SurfacePoint> sites;
  GvdObjective objective;
  GvdOptions options;
};
GvdSetup build_gvd(const Scenario& sc, const TriangleMesh& mesh);

struct RunReport {
  std::string kind;
  std::string status;  // converged | capped | stalled | error
  double energy = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  std::string message;
  std::vector<std::string> artifacts;
  nlohmann::json details = nlohmann::json::object();
  std::vector<IterationRecord> trace;
};
nlohmann::json to_json(const RunReport& r);

// Solves and, when write is set, writes report.json, trace.csv and geometry
// into the output directory.
RunReport run_scenario(const Scenario& sc, bool write = true);

struct VerifyReport {
  std::string mode;
  std::string status;  // pass | fail | skipped
  double max_grad_err = 0.0;
  double max_hess_err = 0.0;
  double max_oracle_err = 0.0;
  int checks = 0;
  int skipped = 0;
  std::string message;
};
nlohmann::json to_json(const VerifyReport& r);
// mode: grad | hess | oracle, at the scenario's initial state.
VerifyReport verify_scenario(const Scenario& sc, const std::string& mode);

// 0 converged or pass/skipped, 1 otherwise.
int exit_code(const std::string& status);

// Geometry exports. Polylines are OBJ "v" and "l" records; points are CSV rows
// face,w0,w1,w2,x,y,z. Both keep 17 significant digits.
void save_polylines(const std::vector<std::vector<Vec3>>& lines, const std::filesystem::path& path);
std::vector<std::vector<Vec3>> load_polylines(const std::filesystem::path& path);
void save_points_csv(const TriangleMesh& mesh, const std::vector<SurfacePoint>& pts,
                     const std::filesystem::path& path);
std::vector<SurfacePoint> load_points_csv(const std::filesystem::path& path);

}  // namespace geodiff
