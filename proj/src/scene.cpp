#include "trolink/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "trolink/extensions.hpp"
#include "trolink/ideals.hpp"

namespace trolink {
namespace {

using nlohmann::json;

constexpr Index kWitnessListCap = 64;

// ---------------------------------------------------------------------------
// JSON access with located errors.  Every accessor names the path of the node
// it rejects, so a bad file produces one precise message instead of a crash.

[[noreturn]] void syntax(const std::string& path, const std::string& what) {
  throw scene_syntax_error(path + ": " + what);
}

const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) syntax(path, std::string("expected an object, got ") + j.type_name());
  return j;
}

const json& expect_array(const json& j, const std::string& path) {
  if (!j.is_array()) syntax(path, std::string("expected an array, got ") + j.type_name());
  return j;
}

std::string expect_string(const json& j, const std::string& path) {
  if (!j.is_string()) syntax(path, std::string("expected a string, got ") + j.type_name());
  return j.get<std::string>();
}

double expect_real(const json& j, const std::string& path) {
  if (!j.is_number()) syntax(path, std::string("expected a number, got ") + j.type_name());
  return j.get<double>();
}

bool expect_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) syntax(path, std::string("expected a boolean, got ") + j.type_name());
  return j.get<bool>();
}

std::uint64_t expect_u64(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const std::int64_t v = j.get<std::int64_t>();
    if (v >= 0) return static_cast<std::uint64_t>(v);
  }
  syntax(path, std::string("expected a non-negative integer, got ") + j.dump());
}

Index expect_index(const json& j, const std::string& path, Index lo, Index hi) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    syntax(path, std::string("expected an integer, got ") + j.type_name());
  if (j.is_number_unsigned()) {
    const std::uint64_t u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(hi))
      syntax(path, "value " + std::to_string(u) + " exceeds the limit " + std::to_string(hi));
    if (static_cast<Index>(u) < lo)
      syntax(path, "value " + std::to_string(u) + " is below the minimum " + std::to_string(lo));
    return static_cast<Index>(u);
  }
  const std::int64_t v = j.get<std::int64_t>();
  if (v < lo || v > hi)
    syntax(path, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
  return static_cast<Index>(v);
}

cplx expect_complex(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    syntax(path, "expected a complex number as a [re, im] pair");
  return cplx(j[0].get<double>(), j[1].get<double>());
}

void check_known_keys(const json& obj, const std::string& path,
                      std::initializer_list<const char*> keys) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : keys)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known) syntax(path + "." + item.key(), "unknown field");
  }
}

const json& require_field(const json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key)) syntax(path, std::string("missing field '") + key + "'");
  return obj.at(key);
}

std::vector<Index> expect_dims(const json& j, const std::string& path, Index lo) {
  expect_array(j, path);
  std::vector<Index> out;
  out.reserve(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(expect_index(j[i], path + "[" + std::to_string(i) + "]", lo, 1000));
  return out;
}

// Row-major matrix of [re, im] pairs; every row must have the same length.
Mat parse_matrix(const json& j, const std::string& path) {
  expect_array(j, path);
  const Index rows = static_cast<Index>(j.size());
  Index cols = 0;
  Mat out(0, 0);
  for (Index r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const json& row = j[static_cast<size_t>(r)];
    expect_array(row, rp);
    if (r == 0) {
      cols = static_cast<Index>(row.size());
      out.resize(rows, cols);
    } else if (static_cast<Index>(row.size()) != cols) {
      throw scene_shape_error(rp + ": row has " + std::to_string(row.size()) +
                              " entries where earlier rows have " + std::to_string(cols));
    }
    for (Index c = 0; c < cols; ++c)
      out(r, c) = expect_complex(row[static_cast<size_t>(c)], rp + "[" + std::to_string(c) + "]");
  }
  return out;
}

Mat expect_map_matrix(const json& j, const std::string& path, Index rows, Index cols) {
  Mat m = parse_matrix(j, path);
  if (m.rows() == 0 && rows == 0) return Mat::Zero(0, cols);
  if (m.rows() != rows || m.cols() != cols)
    throw scene_shape_error(path + ": expected a " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " matrix, got " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
  return m;
}

// One subspace generator: an array with one entry per block of the parent,
// each block a flat row-major list of complex entries.
Vec parse_generator(const json& j, const std::string& path, const Ambient& amb) {
  expect_array(j, path);
  const Index nblocks =
      amb.is_module() ? amb.module().block_count() : amb.algebra().block_count();
  if (static_cast<Index>(j.size()) != nblocks)
    throw scene_shape_error(path + ": expected " + std::to_string(nblocks) + " blocks, got " +
                            std::to_string(j.size()));
  Vec out = Vec::Zero(amb.dim());
  for (Index k = 0; k < nblocks; ++k) {
    const std::string bp = path + "[" + std::to_string(k) + "]";
    const json& block = j[static_cast<size_t>(k)];
    expect_array(block, bp);
    Index want = 0, off = 0;
    if (amb.is_module()) {
      want = amb.module().rows(k) * amb.module().cols(k);
      off = amb.module().block_offset(k);
    } else {
      const Index n = amb.algebra().block_dim(k);
      want = n * n;
      off = amb.algebra().block_offset(k);
    }
    if (static_cast<Index>(block.size()) != want)
      throw scene_shape_error(bp + ": expected " + std::to_string(want) + " entries, got " +
                              std::to_string(block.size()));
    for (Index t = 0; t < want; ++t)
      out(off + t) = expect_complex(block[static_cast<size_t>(t)], bp + "[" + std::to_string(t) + "]");
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON encoding of library values.

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json vec_json(const Vec& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(complex_json(v(i)));
  return a;
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(complex_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json index_json(const std::vector<Index>& v) {
  json a = json::array();
  for (Index x : v) a.push_back(x);
  return a;
}

json capped_index_json(const std::vector<Index>& v) {
  json a = json::array();
  for (size_t i = 0; i < v.size() && i < static_cast<size_t>(kWitnessListCap); ++i)
    a.push_back(v[i]);
  return a;
}

json generator_json(const Ambient& amb, const Vec& flat) {
  json blocks = json::array();
  const Index nblocks =
      amb.is_module() ? amb.module().block_count() : amb.algebra().block_count();
  for (Index k = 0; k < nblocks; ++k) {
    Index want = 0, off = 0;
    if (amb.is_module()) {
      want = amb.module().rows(k) * amb.module().cols(k);
      off = amb.module().block_offset(k);
    } else {
      const Index n = amb.algebra().block_dim(k);
      want = n * n;
      off = amb.algebra().block_offset(k);
    }
    json entries = json::array();
    for (Index t = 0; t < want; ++t) entries.push_back(complex_json(flat(off + t)));
    blocks.push_back(std::move(entries));
  }
  return blocks;
}

// ---------------------------------------------------------------------------
// Text rendering of a structured report.

std::string pretty_key(std::string key) {
  for (char& c : key)
    if (c == '_') c = ' ';
  return key;
}

std::string value_text(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "yes" : "no";
  if (v.is_number_float()) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void render_section(std::ostringstream& out, const char* name, const json& section) {
  if (section.empty()) {
    out << name << ": none\n";
    return;
  }
  out << name << ":\n";
  for (const auto& item : section.items())
    out << "  " << pretty_key(item.key()) << ": " << value_text(item.value()) << "\n";
}

std::string render_text(const json& doc) {
  std::ostringstream out;
  out << "command: " << doc.at("command").get<std::string>() << "\n";
  out << "seed: " << doc.at("seed").dump() << "\n";
  render_section(out, "inputs", doc.at("inputs"));
  std::string verdicts;
  for (const auto& item : doc.at("verdicts").items()) {
    if (!verdicts.empty()) verdicts += "; ";
    verdicts += pretty_key(item.key()) + ": " + value_text(item.value());
  }
  out << "verdicts: " << verdicts << "\n";
  render_section(out, "residuals", doc.at("residuals"));
  render_section(out, "witnesses", doc.at("witnesses"));
  return out.str();
}

// Accumulates the schema-stable report: one object per section, serialized
// with sorted keys so identical inputs give byte-identical text.
struct Builder {
  json inputs = json::object();
  json verdicts = json::object();
  json residuals = json::object();
  json witnesses = json::object();

  CommandReport finish(const std::string& command, const Scene& scene) {
    json doc;
    doc["command"] = command;
    doc["inputs"] = std::move(inputs);
    doc["verdicts"] = std::move(verdicts);
    doc["residuals"] = std::move(residuals);
    doc["witnesses"] = std::move(witnesses);
    doc["seed"] = scene.seed;
    CommandReport out;
    out.structured = doc.dump(2);
    out.structured += "\n";
    out.text = render_text(doc);
    out.verdicts_ok = doc.at("verdicts").at("consistent").get<bool>();
    return out;
  }
};

// ---------------------------------------------------------------------------
// Scene lookups for commands.

std::string need(const std::optional<std::string>& v, const char* what, const char* cmd) {
  if (!v) throw scene_error(std::string(cmd) + ": missing required argument --" + what);
  return *v;
}

const SceneSubspace& find_subspace(const Scene& s, const std::string& name, const char* cmd) {
  const auto it = s.subspaces.find(name);
  if (it == s.subspaces.end())
    throw scene_reference_error(std::string(cmd) + ": undefined subspace '" + name + "'");
  return it->second;
}

const SceneModule& find_module(const Scene& s, const std::string& name, const char* cmd) {
  const auto it = s.modules.find(name);
  if (it == s.modules.end())
    throw scene_reference_error(std::string(cmd) + ": undefined module '" + name + "'");
  return it->second;
}

const SceneMap& find_map(const Scene& s, const std::string& name, const char* cmd) {
  const auto it = s.maps.find(name);
  if (it == s.maps.end())
    throw scene_reference_error(std::string(cmd) + ": undefined map '" + name + "'");
  return it->second;
}

const SceneSequence& find_sequence(const Scene& s, const std::string& name, const char* cmd) {
  const auto it = s.sequences.find(name);
  if (it == s.sequences.end())
    throw scene_reference_error(std::string(cmd) + ": undefined sequence '" + name + "'");
  return it->second;
}

TernaryHom as_module_hom(const Scene& s, const std::string& map_name, const char* cmd) {
  const SceneMap& m = find_map(s, map_name, cmd);
  const auto sit = s.modules.find(m.source);
  const auto tit = s.modules.find(m.target);
  if (sit == s.modules.end() || tit == s.modules.end())
    throw scene_shape_error(std::string(cmd) + ": map '" + map_name +
                            "' joins algebras; a module map is required");
  return make_ternary_hom(sit->second.module, tit->second.module, m.mat, s.tol);
}

ExactSequence as_sequence(const Scene& s, const SceneSequence& sq, const char* cmd) {
  return ExactSequence{as_module_hom(s, sq.maps[0], cmd), as_module_hom(s, sq.maps[1], cmd)};
}

const char* corner_name(Corner c) {
  switch (c) {
    case Corner::base: return "base";
    case Corner::adjoint: return "adjoint";
    case Corner::module: return "module";
    case Corner::compacts: return "compacts";
  }
  return "?";
}

void check_search_args(const CommandArgs& args, const char* cmd) {
  if (args.count < 1) throw scene_error(std::string(cmd) + ": count must be at least 1");
  if (args.workers < 1) throw scene_error(std::string(cmd) + ": workers must be at least 1");
  if (args.bounds.max_blocks < 1 || args.bounds.max_block_dim < 1 || args.bounds.max_mult < 1)
    throw scene_error(std::string(cmd) + ": size bounds must all be at least 1");
}

void put_search_inputs(Builder& b, const Scene& s, const CommandArgs& args) {
  b.inputs["count"] = args.count;
  b.inputs["max_blocks"] = args.bounds.max_blocks;
  b.inputs["max_block_dim"] = args.bounds.max_block_dim;
  b.inputs["max_mult"] = args.bounds.max_mult;
  b.inputs["tol"] = s.tol;
}

// ---------------------------------------------------------------------------
// Commands.

CommandReport cmd_classify(const Scene& s, const CommandArgs& args) {
  const std::string name = need(args.subspace, "subspace", "classify-ideal");
  const SceneSubspace& k = find_subspace(s, name, "classify-ideal");
  if (!k.space.parent().is_module())
    throw scene_shape_error("classify-ideal: subspace '" + name +
                            "' spans an algebra; a module subspace is required");

  Builder b;
  b.inputs["subspace"] = name;
  b.inputs["parent"] = k.parent;
  b.inputs["subspace_dim"] = k.space.dim();
  b.inputs["tol"] = s.tol;

  const ActionClosure sm = is_submodule(k.space);
  const ActionClosure ts = is_ternary_subspace(k.space);
  const IdealSubmoduleResult im = as_ideal_submodule(k.space);
  const TernaryIdealResult ti = is_ternary_ideal(k.space);
  const LinkingIdealResult li = is_linking_ideal(k.space);
  const OneSidedReport os = one_sided_conditions(k.space);

  // Second route: the combined classifier asserts agreement internally, so
  // running it must succeed exactly when the individual answers agree.
  bool classify_ok = false;
  bool matches = true;
  try {
    const IdealClassification cls = classify(k.space);
    classify_ok = true;
    matches = cls.is_submodule == sm.holds && cls.is_ternary_subspace == ts.holds &&
              cls.is_ternary_ideal == ti.holds && cls.is_linking_ideal == li.holds &&
              cls.ideal_submodule.has_value() == im.ok();
  } catch (const consistency_error&) {
  }
  const bool agree = im.ok() == ti.holds && ti.holds == li.holds;

  b.verdicts["submodule"] = sm.holds;
  b.verdicts["ternary_subspace"] = ts.holds;
  b.verdicts["ideal_submodule"] = im.ok();
  b.verdicts["ternary_ideal"] = ti.holds;
  b.verdicts["linking_ideal"] = li.holds;
  b.verdicts["notions_agree"] = agree;
  b.verdicts["one_sided_equivalence"] = os.equivalence_holds;
  b.verdicts["consistent"] = agree && classify_ok && matches && os.equivalence_holds;

  b.residuals["submodule_escape"] = sm.escape;
  b.residuals["ternary_escape"] = ti.escape;
  b.residuals["linking_escape"] = li.escape;
  b.residuals["left_escape"] = os.left_escape;
  b.residuals["right_escape"] = os.right_escape;
  b.residuals["ideal_match_residual"] = im.match_residual;

  b.witnesses["ideal_blocks"] = im.ideal ? index_json(im.ideal->blocks()) : json();
  b.witnesses["minimal_ideal_blocks"] = im.candidate ? index_json(im.candidate->blocks()) : json();
  b.witnesses["carrier_ideal_blocks"] =
      li.carrier_ideal ? index_json(li.carrier_ideal->blocks()) : json();
  if (ti.witness) {
    b.witnesses["escaping_vector"] = vec_json(ti.witness->escaped);
    b.witnesses["escape_triple"] = json{{"x_unit", ti.witness->x_unit},
                                        {"k_basis", ti.witness->k_basis},
                                        {"y_unit", ti.witness->y_unit},
                                        {"residual", ti.witness->residual}};
  } else {
    b.witnesses["escaping_vector"] = json();
    b.witnesses["escape_triple"] = json();
  }
  return b.finish("classify-ideal", s);
}

CommandReport cmd_correspondences(const Scene& s, const CommandArgs& args) {
  const std::string name = need(args.module, "module", "correspondences");
  const SceneModule& m = find_module(s, name, "correspondences");
  const CorrespondenceTable table = ideal_correspondences(m.module, s.tol);
  const Index active = static_cast<Index>(m.module.active_blocks().size());
  const bool rows_match =
      static_cast<Index>(table.rows.size()) == (static_cast<Index>(1) << active);

  Builder b;
  b.inputs["module"] = name;
  b.inputs["base_blocks"] = index_json(m.module.base().block_dims());
  b.inputs["multiplicities"] = index_json(m.module.multiplicities());
  b.inputs["tol"] = s.tol;

  b.verdicts["all_exact"] = table.all_exact;
  b.verdicts["row_count_matches"] = rows_match;
  b.verdicts["consistent"] = table.all_exact && rows_match;

  b.witnesses["row_count"] = table.rows.size();
  json rows = json::array();
  for (size_t i = 0; i < table.rows.size() && i < static_cast<size_t>(kWitnessListCap); ++i) {
    const CorrespondenceRow& r = table.rows[i];
    rows.push_back(json{{"blocks", index_json(r.blocks)},
                        {"ideal_to_module_exact", r.ideal_to_module_exact},
                        {"module_to_ideal_exact", r.module_to_ideal_exact},
                        {"module_to_compacts_exact", r.module_to_compacts_exact},
                        {"compacts_to_module_exact", r.compacts_to_module_exact},
                        {"corner_projections_exact", r.corner_projections_exact}});
  }
  b.witnesses["rows"] = std::move(rows);
  return b.finish("correspondences", s);
}

CommandReport cmd_quotient(const Scene& s, const CommandArgs& args) {
  const std::string name = need(args.subspace, "subspace", "quotient");
  const SceneSubspace& k = find_subspace(s, name, "quotient");
  if (!k.space.parent().is_module())
    throw scene_shape_error("quotient: subspace '" + name +
                            "' spans an algebra; a module subspace is required");
  const HModule& e = k.space.parent().module();

  Builder b;
  b.inputs["subspace"] = name;
  b.inputs["parent"] = k.parent;
  b.inputs["tol"] = s.tol;

  QuotientData q = [&]() {
    if (!args.ideal_blocks) {
      b.inputs["ideal"] = "minimal";
      return module_quotient(e, k.space);
    }
    for (Index blk : *args.ideal_blocks)
      if (blk < 0 || blk >= e.base().block_count())
        throw scene_error("quotient: ideal block " + std::to_string(blk) +
                          " out of range for a base with " +
                          std::to_string(e.base().block_count()) + " blocks");
    b.inputs["ideal"] = index_json(*args.ideal_blocks);
    return module_quotient(e, k.space, BlockIdeal::from_blocks(e.base(), *args.ideal_blocks));
  }();

  const PhiIsometryCheck iso = is_phi_isometry(q.v, q.phi, s.tol);
  const GeneralizedIsometry gi = is_generalized_isometry(q.v, s.tol);

  const Index rank = numeric_rank(q.v.mat, s.tol);
  const bool rank_ok = rank == e.dim() - k.space.dim();
  double annihilation = 0.0;
  const Mat on_kernel = q.v.mat * k.space.onb();
  for (Index c = 0; c < on_kernel.cols(); ++c)
    annihilation = std::max(annihilation, on_kernel.col(c).norm());
  const bool kernel_matches = rank_ok && annihilation <= s.tol;

  b.verdicts["projection_verified"] = q.v.verified;
  b.verdicts["phi_isometry"] = iso.holds;
  b.verdicts["kernel_matches"] = kernel_matches;
  b.verdicts["phi_recovered"] = gi.phi.has_value();
  b.verdicts["consistent"] =
      q.v.verified && iso.holds && kernel_matches && gi.phi.has_value();

  b.residuals["phi_isometry_residual"] = iso.residual;
  b.residuals["kernel_annihilation"] = annihilation;
  b.residuals["phi_solve_residual"] = gi.solve_residual;
  b.residuals["phi_hom_residual"] = gi.hom_residual;

  b.witnesses["ideal_blocks"] = index_json(q.ideal.blocks());
  b.witnesses["quotient_base_blocks"] = index_json(q.quotient_module.base().block_dims());
  b.witnesses["quotient_multiplicities"] = index_json(q.quotient_module.multiplicities());
  b.witnesses["v_matrix"] = mat_json(q.v.mat);
  b.witnesses["phi_matrix"] = mat_json(q.phi.mat);
  return b.finish("quotient", s);
}

CommandReport cmd_check_hom(const Scene& s, const CommandArgs& args) {
  const std::string name = need(args.map, "map", "check-hom");
  const SceneMap& m = find_map(s, name, "check-hom");

  Builder b;
  b.inputs["map"] = name;
  b.inputs["source"] = m.source;
  b.inputs["target"] = m.target;
  b.inputs["tol"] = s.tol;

  if (s.modules.count(m.source)) {
    b.inputs["kind"] = "module";
    const TernaryHom v = make_ternary_hom(s.modules.at(m.source).module,
                                          s.modules.at(m.target).module, m.mat, s.tol);
    const GeneralizedIsometry gi = is_generalized_isometry(v, s.tol);
    const bool faithful = gi.phi && faithful_on_range(*gi.phi, v.source, s.tol);

    b.verdicts["ternary_hom"] = v.verified;
    b.verdicts["phi_recovered"] = gi.phi.has_value();
    b.verdicts["faithful_on_range"] = faithful;
    // Every ternary morphism is a generalized isometry, so a verified map
    // without a recovered phi would expose a defect.
    b.verdicts["consistent"] = !v.verified || gi.phi.has_value();

    b.residuals["hom_residual"] = v.residual;
    b.residuals["phi_solve_residual"] = gi.solve_residual;
    b.residuals["phi_hom_residual"] = gi.hom_residual;
    b.witnesses["phi_matrix"] = gi.phi ? mat_json(gi.phi->mat) : json();
    return b.finish("check-hom", s);
  }

  b.inputs["kind"] = "algebra";
  const SceneAlgebra& src = s.algebras.at(m.source);
  const SceneAlgebra& tgt = s.algebras.at(m.target);
  const AlgHom h{src.algebra, tgt.algebra, m.mat};
  const HomCheck hc = check_alg_hom(h, s.tol);

  b.verdicts["algebra_hom"] = hc.ok();
  b.verdicts["multiplicative"] = hc.multiplicative;
  b.verdicts["star_preserving"] = hc.star_preserving;
  b.residuals["mult_residual"] = hc.mult_residual;
  b.residuals["star_residual"] = hc.star_residual;

  const bool blockwise_view = src.linking_of.has_value() && tgt.linking_of.has_value();
  b.inputs["linking_carriers"] = blockwise_view;
  if (blockwise_view) {
    const LinkingAlgebra sl = build_linking(s.modules.at(src.linking_of->first).module,
                                            src.linking_of->second);
    const LinkingAlgebra tl = build_linking(s.modules.at(tgt.linking_of->first).module,
                                            tgt.linking_of->second);
    const CornerCheck cc = check_blockwise(sl, tl, m.mat, s.tol);
    b.verdicts["blockwise"] = cc.ok();
    b.verdicts["corners_preserved"] = cc.corners_preserved;
    // Two routes to the same homomorphism question must agree.
    b.verdicts["consistent"] = cc.hom.ok() == hc.ok();
    for (int c = 0; c < 4; ++c)
      b.residuals[std::string("corner_escape_") + corner_name(static_cast<Corner>(c))] =
          cc.corner_escape[static_cast<size_t>(c)];
    b.witnesses["violating_corner"] =
        cc.violating_corner ? json(corner_name(*cc.violating_corner)) : json();
  } else {
    b.verdicts["consistent"] = true;
    b.witnesses["violating_corner"] = json();
  }
  return b.finish("check-hom", s);
}

CommandReport cmd_extend_hom(const Scene& s, const CommandArgs& args) {
  const std::string name = need(args.map, "map", "extend-hom");
  const SceneMap& m = find_map(s, name, "extend-hom");
  const TernaryHom v = as_module_hom(s, name, "extend-hom");
  if (!v.verified) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v.residual);
    throw verification_error("extend-hom: map '" + name +
                             "' fails the ternary product rule (residual " + buf + ")");
  }

  Builder b;
  b.inputs["map"] = name;
  b.inputs["source"] = m.source;
  b.inputs["target"] = m.target;
  b.inputs["variant"] = args.full ? "full" : "reduced";
  b.inputs["tol"] = s.tol;

  const BlockwiseHom bw = extend_to_blockwise(v, !args.full, s.tol);
  const CornerCheck cc = check_blockwise(bw.source, bw.target, bw.assembled.mat, s.tol);
  const GeneralizedIsometry gi = is_generalized_isometry(v, s.tol);

  // The extension's phi acts on the base corner of the linking algebra; when
  // that corner is all of the base, the isometry law can be checked against
  // it directly.  Otherwise the independently solved phi carries the law.
  const bool iso_direct = bw.phi.source == v.source.base();
  PhiIsometryCheck iso;
  if (iso_direct) iso = is_phi_isometry(v, bw.phi, s.tol);
  const bool isometry = iso_direct ? iso.holds : gi.phi.has_value();

  b.verdicts["extension_verified"] = bw.verified;
  b.verdicts["assembled_is_hom"] = cc.hom.ok();
  b.verdicts["corners_preserved"] = cc.corners_preserved;
  b.verdicts["phi_recovered"] = gi.phi.has_value();
  b.verdicts["phi_isometry"] = isometry;
  b.verdicts["consistent"] =
      bw.verified && cc.hom.ok() && cc.corners_preserved && gi.phi.has_value() && isometry;

  b.residuals["phi_residual"] = bw.phi_residual;
  b.residuals["psi_residual"] = bw.psi_residual;
  b.residuals["mult_residual"] = bw.mult_residual;
  b.residuals["star_residual"] = bw.star_residual;
  b.residuals["uniqueness_gap"] = bw.uniqueness_gap;
  b.residuals["isometry_residual"] = iso_direct ? iso.residual : gi.solve_residual;

  b.witnesses["phi_matrix"] = mat_json(bw.phi.mat);
  b.witnesses["psi_matrix"] = mat_json(bw.psi.mat);
  b.witnesses["source_carrier_blocks"] = index_json(bw.source.carrier().block_dims());
  b.witnesses["target_carrier_blocks"] = index_json(bw.target.carrier().block_dims());
  return b.finish("extend-hom", s);
}

CommandReport cmd_check_extension(const Scene& s, const CommandArgs& args) {
  const std::string name = need(args.sequence, "sequence", "check-extension");
  const SceneSequence& sq = find_sequence(s, name, "check-extension");
  const ExactSequence seq = as_sequence(s, sq, "check-extension");
  const SequenceReport rep = verify_short_exact(seq, s.tol);

  Builder b;
  b.inputs["sequence"] = name;
  b.inputs["modules"] = json::array({sq.modules[0], sq.modules[1], sq.modules[2]});
  b.inputs["maps"] = json::array({sq.maps[0], sq.maps[1]});
  b.inputs["tol"] = s.tol;

  b.verdicts["maps_verified"] = rep.maps_verified;
  b.verdicts["injective"] = rep.injective;
  b.verdicts["surjective"] = rep.surjective;
  b.verdicts["exact_middle"] = rep.exact_middle;
  b.verdicts["exact"] = rep.ok();

  bool blockwise_exact = false, corners_restrict = false;
  bool base_diag = false, compacts_diag = false;
  double corner_gap = 0.0;
  bool consistent = true;
  if (rep.ok()) {
    const BlockwiseSequence bws = to_blockwise_extension(seq, s.tol);
    const DiagonalExtensions diag = diagonal_extensions(seq, s.tol);
    blockwise_exact = bws.ok();
    corners_restrict = bws.corners_restrict;
    corner_gap = bws.corner_gap;
    base_diag = diag.base_exact;
    compacts_diag = diag.compacts_exact;
    consistent = blockwise_exact && corners_restrict && base_diag && compacts_diag;
  }
  b.verdicts["blockwise_exact"] = blockwise_exact;
  b.verdicts["corners_restrict"] = corners_restrict;
  b.verdicts["base_diagonal_exact"] = base_diag;
  b.verdicts["compacts_diagonal_exact"] = compacts_diag;
  b.verdicts["consistent"] = consistent;

  b.residuals["exactness_gap"] = rep.exactness_gap;
  b.residuals["corner_gap"] = corner_gap;

  b.witnesses["escaping_vector"] = rep.witness ? vec_json(*rep.witness) : json();
  b.witnesses["sub_dim"] = seq.sub().dim();
  b.witnesses["total_dim"] = seq.total().dim();
  b.witnesses["quot_dim"] = seq.quot().dim();
  return b.finish("check-extension", s);
}

CommandReport cmd_split(const Scene& s, const CommandArgs& args) {
  const std::string name = need(args.sequence, "sequence", "split");
  const SceneSequence& sq = find_sequence(s, name, "split");
  const ExactSequence seq = as_sequence(s, sq, "split");

  const SplittingData sp = construct_splitting(seq, s.tol);
  const BusbyWitness bus = busby_trivial_witness(seq, s.tol);

  Builder b;
  b.inputs["sequence"] = name;
  b.inputs["modules"] = json::array({sq.modules[0], sq.modules[1], sq.modules[2]});
  b.inputs["maps"] = json::array({sq.maps[0], sq.maps[1]});
  b.inputs["tol"] = s.tol;

  b.verdicts["complement_is_ideal"] = sp.complement_is_ideal;
  b.verdicts["splitting_verified"] = sp.verified;
  b.verdicts["maps_correspond"] = bus.maps_correspond;
  b.verdicts["base_splits"] = bus.base_splits;
  b.verdicts["direct_sum_verified"] = bus.verified;
  b.verdicts["consistent"] = sp.complement_is_ideal && sp.verified && bus.maps_correspond &&
                             bus.base_splits && bus.verified;

  b.residuals["section_residual"] = sp.section_residual;
  b.residuals["direct_sum_residual"] = bus.residual;

  const auto mask = as_module_block_mask(sp.complement);
  if (mask) {
    std::vector<Index> blocks;
    for (size_t i = 0; i < mask->size(); ++i)
      if ((*mask)[i]) blocks.push_back(static_cast<Index>(i));
    b.witnesses["complement_blocks"] = index_json(blocks);
  } else {
    b.witnesses["complement_blocks"] = json();
  }
  b.witnesses["splitting_matrix"] = mat_json(sp.s.mat);
  b.witnesses["w_matrix"] = mat_json(bus.w.mat);
  b.witnesses["sum_base_blocks"] = index_json(bus.sum.total().base().block_dims());
  return b.finish("split", s);
}

CommandReport cmd_search_hereditary(const Scene& s, const CommandArgs& args) {
  check_search_args(args, "search-hereditary");
  const HereditarySearchReport rep =
      hereditary_search(args.count, args.bounds, s.seed, args.workers);

  Builder b;
  put_search_inputs(b, s, args);
  b.verdicts["all_samples_ternary"] = rep.ternary_subspaces == rep.count;
  b.verdicts["implications_hold"] = rep.implication_violations == 0;
  b.verdicts["consistent"] =
      rep.ternary_subspaces == rep.count && rep.implication_violations == 0;

  b.witnesses["counts"] = json{{"ternary_subspaces", rep.ternary_subspaces},
                               {"ternary_hereditary", rep.ternary_hereditary},
                               {"linking_hereditary", rep.linking_hereditary},
                               {"base_hereditary", rep.base_hereditary},
                               {"compacts_hereditary", rep.compacts_hereditary},
                               {"open_direction", rep.open_direction},
                               {"implication_violations", rep.implication_violations}};
  b.witnesses["open_samples"] = capped_index_json(rep.open_samples);
  b.witnesses["violation_samples"] = capped_index_json(rep.violation_samples);
  return b.finish("search-hereditary", s);
}

CommandReport cmd_search_q1(const Scene& s, const CommandArgs& args) {
  check_search_args(args, "search-q1");
  const Q1SearchReport rep = q1_search(args.count, args.bounds, s.seed, args.workers);

  Index in_cells = 0;
  for (Index c : rep.cells) in_cells += c;

  Builder b;
  put_search_inputs(b, s, args);
  b.verdicts["cells_cover_count"] = in_cells == rep.count;
  b.verdicts["tally_consistent"] = rep.cells[15] == rep.all_pass;
  b.verdicts["consistent"] = in_cells == rep.count && rep.cells[15] == rep.all_pass;

  json cells = json::array();
  for (Index c : rep.cells) cells.push_back(c);
  b.witnesses["cells"] = std::move(cells);
  b.witnesses["all_pass"] = rep.all_pass;
  // Idempotent, ternary range, ternary law, yet non-contractive: the cell a
  // counterexample to the expectation question would land in.
  b.witnesses["law_without_contraction"] = rep.cells[7];
  return b.finish("search-q1", s);
}

}  // namespace

// ---------------------------------------------------------------------------
// Registry equality.

namespace {
bool mat_equal(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || (a.array() == b.array()).all();
}
}  // namespace

bool operator==(const SceneAlgebra& a, const SceneAlgebra& b) {
  return a.algebra == b.algebra && a.linking_of == b.linking_of;
}
bool operator==(const SceneModule& a, const SceneModule& b) {
  return a.base == b.base && a.module == b.module;
}
bool operator==(const SceneSubspace& a, const SceneSubspace& b) {
  return a.parent == b.parent && mat_equal(a.generators, b.generators);
}
bool operator==(const SceneMap& a, const SceneMap& b) {
  return a.source == b.source && a.target == b.target && mat_equal(a.mat, b.mat);
}
bool operator==(const SceneSequence& a, const SceneSequence& b) {
  return a.modules == b.modules && a.maps == b.maps;
}
bool operator==(const Scene& a, const Scene& b) {
  return a.tol == b.tol && a.seed == b.seed && a.algebras == b.algebras &&
         a.modules == b.modules && a.subspaces == b.subspaces && a.maps == b.maps &&
         a.sequences == b.sequences;
}

// ---------------------------------------------------------------------------
// Parsing.

Scene parse_scene(const std::string& text, std::optional<double> tol_override,
                  std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw scene_syntax_error(std::string("scene: ") + e.what());
  }
  if (!doc.is_object())
    syntax("scene", std::string("expected an object at the top level, got ") + doc.type_name());
  check_known_keys(doc, "scene",
                   {"settings", "algebras", "modules", "subspaces", "maps", "sequences"});

  Scene out;
  if (doc.contains("settings")) {
    const json& st = expect_object(doc.at("settings"), "scene.settings");
    check_known_keys(st, "scene.settings", {"tol", "seed"});
    if (st.contains("tol")) {
      out.tol = expect_real(st.at("tol"), "scene.settings.tol");
      if (!(out.tol > 0.0) || out.tol > 1.0)
        syntax("scene.settings.tol", "tolerance must lie in (0, 1]");
    }
    if (st.contains("seed")) out.seed = expect_u64(st.at("seed"), "scene.settings.seed");
  }
  if (tol_override) out.tol = *tol_override;
  if (seed_override) out.seed = *seed_override;

  std::set<std::string> names;
  const auto claim = [&](const std::string& name, const std::string& path) {
    if (name.empty()) syntax(path, "names must be non-empty");
    if (!names.insert(name).second)
      throw scene_reference_error(path + ": name '" + name + "' is already declared");
  };

  struct RawEntry {
    const json* body;
    std::string path;
  };
  std::map<std::string, RawEntry> raw_algebras, raw_modules;

  if (doc.contains("algebras")) {
    const json& section = expect_object(doc.at("algebras"), "scene.algebras");
    for (const auto& item : section.items()) {
      const std::string path = "scene.algebras." + item.key();
      claim(item.key(), path);
      expect_object(item.value(), path);
      raw_algebras.emplace(item.key(), RawEntry{&item.value(), path});
    }
  }
  if (doc.contains("modules")) {
    const json& section = expect_object(doc.at("modules"), "scene.modules");
    for (const auto& item : section.items()) {
      const std::string path = "scene.modules." + item.key();
      claim(item.key(), path);
      expect_object(item.value(), path);
      raw_modules.emplace(item.key(), RawEntry{&item.value(), path});
    }
  }

  // Algebras and modules may reference each other (a module over an algebra,
  // an algebra as the linking carrier of a module), so build whatever has its
  // dependency ready until nothing moves.
  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& [name, raw] : raw_algebras) {
      if (out.algebras.count(name)) continue;
      const json& body = *raw.body;
      const bool plain = body.contains("blocks");
      const bool link = body.contains("linking_of");
      if (plain == link) syntax(raw.path, "declare exactly one of 'blocks' or 'linking_of'");
      if (plain) {
        check_known_keys(body, raw.path, {"blocks"});
        out.algebras.emplace(
            name, SceneAlgebra{FdAlgebra(expect_dims(body.at("blocks"), raw.path + ".blocks", 1)),
                               std::nullopt});
        progress = true;
      } else {
        check_known_keys(body, raw.path, {"linking_of", "reduced"});
        const std::string mod = expect_string(body.at("linking_of"), raw.path + ".linking_of");
        bool reduced = true;
        if (body.contains("reduced"))
          reduced = expect_bool(body.at("reduced"), raw.path + ".reduced");
        const auto it = out.modules.find(mod);
        if (it == out.modules.end()) continue;
        out.algebras.emplace(name,
                             SceneAlgebra{build_linking(it->second.module, reduced).carrier(),
                                          std::make_pair(mod, reduced)});
        progress = true;
      }
    }
    for (const auto& [name, raw] : raw_modules) {
      if (out.modules.count(name)) continue;
      const json& body = *raw.body;
      check_known_keys(body, raw.path, {"base", "multiplicities"});
      const std::string base =
          expect_string(require_field(body, "base", raw.path), raw.path + ".base");
      const json& mults = require_field(body, "multiplicities", raw.path);
      const auto it = out.algebras.find(base);
      if (it == out.algebras.end()) continue;
      std::vector<Index> mult = expect_dims(mults, raw.path + ".multiplicities", 0);
      if (static_cast<Index>(mult.size()) != it->second.algebra.block_count())
        throw scene_shape_error(raw.path + ".multiplicities: expected " +
                                std::to_string(it->second.algebra.block_count()) +
                                " entries for base '" + base + "', got " +
                                std::to_string(mult.size()));
      out.modules.emplace(name, SceneModule{base, HModule(it->second.algebra, std::move(mult))});
      progress = true;
    }
  }
  for (const auto& [name, raw] : raw_algebras) {
    if (out.algebras.count(name)) continue;
    const std::string mod = raw.body->at("linking_of").get<std::string>();
    if (!raw_modules.count(mod)) {
      if (names.count(mod))
        throw scene_reference_error(raw.path + ".linking_of: '" + mod + "' is not a module");
      throw scene_reference_error(raw.path + ".linking_of: undefined module '" + mod + "'");
    }
    throw scene_reference_error(raw.path + ": declaration cycle through module '" + mod + "'");
  }
  for (const auto& [name, raw] : raw_modules) {
    if (out.modules.count(name)) continue;
    const std::string base = raw.body->at("base").get<std::string>();
    if (!raw_algebras.count(base)) {
      if (names.count(base))
        throw scene_reference_error(raw.path + ".base: '" + base + "' is not an algebra");
      throw scene_reference_error(raw.path + ".base: undefined algebra '" + base + "'");
    }
    throw scene_reference_error(raw.path + ": declaration cycle through algebra '" + base + "'");
  }

  if (doc.contains("subspaces")) {
    const json& section = expect_object(doc.at("subspaces"), "scene.subspaces");
    for (const auto& item : section.items()) {
      const std::string path = "scene.subspaces." + item.key();
      claim(item.key(), path);
      const json& body = expect_object(item.value(), path);
      check_known_keys(body, path, {"parent", "generators"});
      const std::string parent =
          expect_string(require_field(body, "parent", path), path + ".parent");
      const Ambient amb = [&]() -> Ambient {
        if (const auto mit = out.modules.find(parent); mit != out.modules.end())
          return Ambient(mit->second.module);
        if (const auto ait = out.algebras.find(parent); ait != out.algebras.end())
          return Ambient(ait->second.algebra);
        throw scene_reference_error(path + ".parent: undefined module or algebra '" + parent +
                                    "'");
      }();
      const json& gens = require_field(body, "generators", path);
      expect_array(gens, path + ".generators");
      Mat g(amb.dim(), static_cast<Index>(gens.size()));
      for (size_t i = 0; i < gens.size(); ++i)
        g.col(static_cast<Index>(i)) = parse_generator(
            gens[i], path + ".generators[" + std::to_string(i) + "]", amb);
      Subspace space = span(amb, g, out.tol);
      out.subspaces.emplace(item.key(), SceneSubspace{parent, std::move(g), std::move(space)});
    }
  }

  if (doc.contains("maps")) {
    const json& section = expect_object(doc.at("maps"), "scene.maps");
    for (const auto& item : section.items()) {
      const std::string path = "scene.maps." + item.key();
      claim(item.key(), path);
      const json& body = expect_object(item.value(), path);
      check_known_keys(body, path, {"source", "target", "matrix"});
      const std::string source =
          expect_string(require_field(body, "source", path), path + ".source");
      const std::string target =
          expect_string(require_field(body, "target", path), path + ".target");
      const auto end_dim = [&](const std::string& end,
                               const char* field) -> std::pair<Index, bool> {
        if (const auto mit = out.modules.find(end); mit != out.modules.end())
          return {mit->second.module.dim(), true};
        if (const auto ait = out.algebras.find(end); ait != out.algebras.end())
          return {ait->second.algebra.dim(), false};
        throw scene_reference_error(path + "." + field + ": undefined module or algebra '" +
                                    end + "'");
      };
      const auto [sdim, smod] = end_dim(source, "source");
      const auto [tdim, tmod] = end_dim(target, "target");
      if (smod != tmod)
        throw scene_shape_error(path + ": source '" + source + "' and target '" + target +
                                "' must both be modules or both be algebras");
      Mat m = expect_map_matrix(require_field(body, "matrix", path), path + ".matrix", tdim, sdim);
      out.maps.emplace(item.key(), SceneMap{source, target, std::move(m)});
    }
  }

  if (doc.contains("sequences")) {
    const json& section = expect_object(doc.at("sequences"), "scene.sequences");
    for (const auto& item : section.items()) {
      const std::string path = "scene.sequences." + item.key();
      claim(item.key(), path);
      const json& body = expect_object(item.value(), path);
      check_known_keys(body, path, {"modules", "maps"});
      const json& mods = require_field(body, "modules", path);
      expect_array(mods, path + ".modules");
      if (mods.size() != 3)
        throw scene_shape_error(path + ".modules: expected 3 module names (sub, total, quot), got " +
                                std::to_string(mods.size()));
      SceneSequence sq;
      for (size_t i = 0; i < 3; ++i) {
        const std::string mp = path + ".modules[" + std::to_string(i) + "]";
        sq.modules[i] = expect_string(mods[i], mp);
        if (!out.modules.count(sq.modules[i]))
          throw scene_reference_error(mp + ": undefined module '" + sq.modules[i] + "'");
      }
      const json& maps = require_field(body, "maps", path);
      expect_array(maps, path + ".maps");
      if (maps.size() != 2)
        throw scene_shape_error(path + ".maps: expected 2 map names, got " +
                                std::to_string(maps.size()));
      for (size_t i = 0; i < 2; ++i) {
        const std::string mp = path + ".maps[" + std::to_string(i) + "]";
        sq.maps[i] = expect_string(maps[i], mp);
        const auto it = out.maps.find(sq.maps[i]);
        if (it == out.maps.end())
          throw scene_reference_error(mp + ": undefined map '" + sq.maps[i] + "'");
        const std::string& want_src = sq.modules[i];
        const std::string& want_tgt = sq.modules[i + 1];
        if (it->second.source != want_src || it->second.target != want_tgt)
          throw scene_shape_error(mp + ": map '" + sq.maps[i] + "' joins '" + it->second.source +
                                  "' -> '" + it->second.target + "', expected '" + want_src +
                                  "' -> '" + want_tgt + "'");
      }
      out.sequences.emplace(item.key(), std::move(sq));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rendering.

std::string render_scene(const Scene& scene) {
  json doc = json::object();
  doc["settings"] = json{{"seed", scene.seed}, {"tol", scene.tol}};

  const auto ambient_of = [&](const std::string& parent) -> Ambient {
    if (const auto mit = scene.modules.find(parent); mit != scene.modules.end())
      return Ambient(mit->second.module);
    if (const auto ait = scene.algebras.find(parent); ait != scene.algebras.end())
      return Ambient(ait->second.algebra);
    throw scene_reference_error("render: undefined parent '" + parent + "'");
  };

  if (!scene.algebras.empty()) {
    json section = json::object();
    for (const auto& [name, a] : scene.algebras) {
      if (a.linking_of)
        section[name] = json{{"linking_of", a.linking_of->first}, {"reduced", a.linking_of->second}};
      else
        section[name] = json{{"blocks", index_json(a.algebra.block_dims())}};
    }
    doc["algebras"] = std::move(section);
  }
  if (!scene.modules.empty()) {
    json section = json::object();
    for (const auto& [name, m] : scene.modules)
      section[name] =
          json{{"base", m.base}, {"multiplicities", index_json(m.module.multiplicities())}};
    doc["modules"] = std::move(section);
  }
  if (!scene.subspaces.empty()) {
    json section = json::object();
    for (const auto& [name, sub] : scene.subspaces) {
      const Ambient amb = ambient_of(sub.parent);
      json gens = json::array();
      for (Index c = 0; c < sub.generators.cols(); ++c)
        gens.push_back(generator_json(amb, sub.generators.col(c)));
      section[name] = json{{"parent", sub.parent}, {"generators", std::move(gens)}};
    }
    doc["subspaces"] = std::move(section);
  }
  if (!scene.maps.empty()) {
    json section = json::object();
    for (const auto& [name, m] : scene.maps)
      section[name] =
          json{{"source", m.source}, {"target", m.target}, {"matrix", mat_json(m.mat)}};
    doc["maps"] = std::move(section);
  }
  if (!scene.sequences.empty()) {
    json section = json::object();
    for (const auto& [name, sq] : scene.sequences)
      section[name] = json{{"modules", json::array({sq.modules[0], sq.modules[1], sq.modules[2]})},
                           {"maps", json::array({sq.maps[0], sq.maps[1]})}};
    doc["sequences"] = std::move(section);
  }

  std::string out = doc.dump(2);
  out += "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Command dispatch.

CommandReport run_command(const Scene& scene, const std::string& command,
                          const CommandArgs& args) {
  if (command == "classify-ideal") return cmd_classify(scene, args);
  if (command == "correspondences") return cmd_correspondences(scene, args);
  if (command == "quotient") return cmd_quotient(scene, args);
  if (command == "check-hom") return cmd_check_hom(scene, args);
  if (command == "extend-hom") return cmd_extend_hom(scene, args);
  if (command == "check-extension") return cmd_check_extension(scene, args);
  if (command == "split") return cmd_split(scene, args);
  if (command == "search-hereditary") return cmd_search_hereditary(scene, args);
  if (command == "search-q1") return cmd_search_q1(scene, args);
  throw scene_error("unknown command '" + command + "'");
}

}  // namespace trolink
