#include <CLI11.hpp>
#include <iostream>

#include "geodiff/generators.hpp"
#include "geodiff/scenario.hpp"

using namespace geodiff;

// exit codes: 0 converged or pass, 1 capped/stalled/failed, 2 bad input
int main(int argc, char** argv) {
  CLI::App app{"Differentiable geodesic energies on triangle meshes"};
  app.require_subcommand(1);

  std::string scenario, mode = "grad", kind, out;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "solve a scenario and write its report and geometry");
  run->add_option("scenario", scenario, "scenario JSON")->required();
  run->add_flag("-q,--quiet", quiet, "print only the status line");

  auto* verify = app.add_subcommand("verify", "check derivatives or distances at the initial state");
  verify->add_option("scenario", scenario, "scenario JSON")->required();
  verify->add_option("--mode", mode, "grad, hess or oracle")->check(CLI::IsMember({"grad", "hess", "oracle"}));

  auto* gen = app.add_subcommand("gen-mesh", "write a bundled test mesh as OBJ");
  gen->add_option("kind", kind, "grid, square, icosphere0..icosphere5, cube, fold, torus or saddle")->required();
  gen->add_option("out", out, "output OBJ")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      save_obj(make_named_mesh(kind), out);
      return 0;
    }
    const Scenario sc = load_scenario(scenario);
    if (*run) {
      const RunReport r = run_scenario(sc);
      if (quiet)
        std::cout << r.status << '\n';
      else
        std::cout << to_json(r).dump(2) << '\n';
      return exit_code(r.status);
    }
    const VerifyReport v = verify_scenario(sc, mode);
    std::cout << to_json(v).dump(2) << '\n';
    return exit_code(v.status);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const MeshError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
