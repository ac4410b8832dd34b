#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trolink/scene.hpp"

// Exit codes: 0 when every verdict in the report is consistent, 1 when a
// verdict fails or a library-level verification refuses the input, 2 for
// input problems (bad flags, unreadable or invalid scene files, names that do
// not resolve).

int main(int argc, char** argv) {
  using namespace trolink;

  CLI::App app{"workbench for block-form operator algebras and their modules"};

  std::string command;
  app.add_option("command", command,
                 "classify-ideal | correspondences | quotient | check-hom | extend-hom | "
                 "check-extension | split | search-hereditary | search-q1")
      ->required();

  std::string scene_path;
  CLI::Option* scene_opt = app.add_option("--scene", scene_path, "scene file (JSON)");
  double tol = 0.0;
  CLI::Option* tol_opt = app.add_option("--tol", tol, "tolerance override for every check");
  std::uint64_t seed = 0;
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "seed override for searches and reports");
  std::string format = "text";
  app.add_option("--format", format, "report format")
      ->check(CLI::IsMember({"text", "structured"}));

  std::string subspace, module_name, map_name, sequence;
  app.add_option("--subspace", subspace, "subspace argument (classify-ideal, quotient)");
  app.add_option("--module", module_name, "module argument (correspondences)");
  app.add_option("--map", map_name, "map argument (check-hom, extend-hom)");
  app.add_option("--sequence", sequence, "sequence argument (check-extension, split)");

  std::vector<Index> ideal_blocks;
  CLI::Option* blocks_opt =
      app.add_option("--ideal-blocks", ideal_blocks,
                     "explicit quotient ideal as comma-separated block indices")
          ->delimiter(',');
  bool full = false;
  app.add_flag("--full", full, "extend over the full linking algebras");

  Index count = 1000;
  app.add_option("--count", count, "number of search samples");
  std::vector<Index> bounds;
  app.add_option("--bounds", bounds, "search size bounds: blocks,block-dim,multiplicity")
      ->delimiter(',')
      ->expected(3);
  Index workers = 1;
  app.add_option("--workers", workers, "worker threads for searches");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::optional<double> tol_override;
    if (tol_opt->count() > 0) {
      if (!(tol > 0.0) || tol > 1.0) throw scene_error("--tol must lie in (0, 1]");
      tol_override = tol;
    }
    std::optional<std::uint64_t> seed_override;
    if (seed_opt->count() > 0) seed_override = seed;

    Scene scene;
    if (scene_opt->count() > 0) {
      std::ifstream in(scene_path, std::ios::binary);
      if (!in) throw scene_error("cannot open scene file '" + scene_path + "'");
      std::ostringstream buf;
      buf << in.rdbuf();
      scene = parse_scene(buf.str(), tol_override, seed_override);
    } else {
      if (tol_override) scene.tol = *tol_override;
      if (seed_override) scene.seed = *seed_override;
    }

    CommandArgs args;
    if (!subspace.empty()) args.subspace = subspace;
    if (!module_name.empty()) args.module = module_name;
    if (!map_name.empty()) args.map = map_name;
    if (!sequence.empty()) args.sequence = sequence;
    if (blocks_opt->count() > 0) args.ideal_blocks = ideal_blocks;
    args.full = full;
    args.count = count;
    if (!bounds.empty()) {
      args.bounds.max_blocks = bounds[0];
      args.bounds.max_block_dim = bounds[1];
      args.bounds.max_mult = bounds[2];
    }
    args.workers = workers;

    const CommandReport report = run_command(scene, command, args);
    std::cout << (format == "structured" ? report.structured : report.text);
    return report.verdicts_ok ? 0 : 1;
  } catch (const scene_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
