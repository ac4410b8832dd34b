#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trolink/probes.hpp"

namespace trolink {

// Scene files describe a workspace of named objects in JSON: algebras,
// modules over them, subspaces given by generators, linear maps and short
// sequences.  Complex numbers are [re, im] pairs and matrices are row-major,
// which is also the order the library flattens blocks in, so files and
// in-memory elements agree bit for bit.

/// Any scene-file problem: the base class is what the CLI maps to its
/// input-error exit code.
struct scene_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Text that is not valid JSON or has the wrong shape (types, arity,
/// unknown fields).  The message carries the path to the offending node.
struct scene_syntax_error : scene_error {
  using scene_error::scene_error;
};

/// A name that is used but never declared, or declared twice, or part of a
/// declaration cycle.
struct scene_reference_error : scene_error {
  using scene_error::scene_error;
};

/// Structurally valid data whose dimensions do not fit together.
struct scene_shape_error : scene_error {
  using scene_error::scene_error;
};

/// A declared algebra; carries its declaration style so rendering a parsed
/// scene reproduces the file.  `linking_of` holds {module name, reduced}
/// when the algebra was declared as a linking carrier, which also lets
/// commands interpret maps between such carriers blockwise.
struct SceneAlgebra {
  FdAlgebra algebra;
  std::optional<std::pair<std::string, bool>> linking_of;
};

/// A declared module together with the name of its base algebra.
struct SceneModule {
  std::string base;
  HModule module;
};

/// A subspace of a named module or algebra, spanned by the declared
/// generator columns.
struct SceneSubspace {
  std::string parent;
  Mat generators;  // one flattened generator per column, as declared
  Subspace space;  // the span, built at parse time with the scene tolerance
};

/// A linear map between two named modules or two named algebras.
struct SceneMap {
  std::string source;
  std::string target;
  Mat mat;  // target.dim() x source.dim()
};

/// A short sequence sub -> total -> quot given by two named module maps.
struct SceneSequence {
  std::array<std::string, 3> modules;  // sub, total, quot
  std::array<std::string, 2> maps;     // sub -> total, total -> quot
};

struct Scene {
  double tol = kDefaultTol;
  std::uint64_t seed = 0;
  std::map<std::string, SceneAlgebra> algebras;
  std::map<std::string, SceneModule> modules;
  std::map<std::string, SceneSubspace> subspaces;
  std::map<std::string, SceneMap> maps;
  std::map<std::string, SceneSequence> sequences;
};

bool operator==(const SceneAlgebra& a, const SceneAlgebra& b);
bool operator==(const SceneModule& a, const SceneModule& b);
bool operator==(const SceneSubspace& a, const SceneSubspace& b);
bool operator==(const SceneMap& a, const SceneMap& b);
bool operator==(const SceneSequence& a, const SceneSequence& b);
/// Equality of the declared registries: settings and every named object,
/// with exact matrix comparison.  Derived data (subspace spans) is not
/// compared.
bool operator==(const Scene& a, const Scene& b);

/// Parses a scene file.  Totally defensive: every failure is reported as a
/// scene_* error naming the JSON path, never as a crash or a silently
/// defaulted value.  The overrides replace the file's settings before any
/// object is built (the tolerance participates in span construction).
Scene parse_scene(const std::string& text,
                  std::optional<double> tol_override = std::nullopt,
                  std::optional<std::uint64_t> seed_override = std::nullopt);

/// Renders a scene back to canonical JSON text; parse_scene(render_scene(s))
/// equals s.
std::string render_scene(const Scene& scene);

/// Arguments a command may consume; which ones are required depends on the
/// command.
struct CommandArgs {
  std::optional<std::string> subspace;
  std::optional<std::string> module;
  std::optional<std::string> map;
  std::optional<std::string> sequence;
  std::optional<std::vector<Index>> ideal_blocks;  // explicit quotient ideal
  bool full = false;       // extend over the full linking algebras
  Index count = 1000;      // randomized-search sample count
  SizeBounds bounds;       // randomized-search size bounds
  Index workers = 1;       // worker threads for searches (not echoed in reports)
};

/// Result of one command: the structured report (stable JSON schema
/// {command, inputs, verdicts, residuals, witnesses, seed}), the same
/// content as text, and whether every verdict came out consistent.
struct CommandReport {
  std::string structured;
  std::string text;
  bool verdicts_ok = false;
};

/// Executes one named command against a parsed scene.  Unknown commands,
/// missing arguments and dangling argument names raise scene errors; the
/// library's own verification failures propagate as their usual exception
/// types.
CommandReport run_command(const Scene& scene, const std::string& command,
                          const CommandArgs& args);

}  // namespace trolink
