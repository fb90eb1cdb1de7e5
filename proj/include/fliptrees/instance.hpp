#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fliptrees/complex.hpp"
#include "fliptrees/errors.hpp"
#include "fliptrees/metric_tree.hpp"
#include "fliptrees/piece.hpp"
#include "fliptrees/rng.hpp"
#include "fliptrees/types.hpp"

namespace fliptrees {

enum class PieceKind { synthetic, pants };

// Shipped negative controls: fixtures that must demonstrably fail.
enum class NegativeControl { none, broken_shadow, missing_gluing };

struct InstanceConfig {
  std::string name = "instance";
  TreeShape bs_shape = PathShape{3};
  PieceKind piece_kind = PieceKind::synthetic;
  Radii radii{8, 8, 8};
  int margin = 2;
  int sample_count = 500;
  std::uint64_t seed = 1;
  NegativeControl negative_control = NegativeControl::none;

  void validate() const {
    if (radii.line < 1 || radii.z < 1)
      throw ConfigError("line and z radii must be >= 1");
    if (piece_kind == PieceKind::synthetic && radii.base < radii.line)
      throw ConfigError("base radius must be >= line radius");
    if (margin < 0) throw ConfigError("margin must be >= 0");
    if (margin > radii.line || margin > radii.z || margin > radii.base)
      throw ConfigError("margin exceeds a truncation radius");
    if (sample_count < 1) throw ConfigError("sample_count must be >= 1");
    if (negative_control == NegativeControl::broken_shadow &&
        piece_kind != PieceKind::synthetic)
      throw ConfigError("broken_shadow control needs synthetic pieces");
  }
};

namespace detail {

inline void expect_keys(const nlohmann::json& j,
                        const std::set<std::string>& allowed,
                        const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError(ctx + ": unknown key \"" + key + "\"");
  }
}

inline int int_field(const nlohmann::json& j, const std::string& key,
                     const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + ": missing key \"" + key + "\"");
  if (!j[key].is_number_integer())
    throw ConfigError(ctx + ": \"" + key + "\" must be an integer");
  return j[key].get<int>();
}

}  // namespace detail

inline TreeShape parse_tree_shape(const nlohmann::json& j, const std::string& ctx) {
  detail::expect_keys(j, {"shape", "length", "valence", "depth", "edges"}, ctx);
  const std::string shape = j.value("shape", "");
  if (shape == "path") {
    detail::expect_keys(j, {"shape", "length"}, ctx);
    return PathShape{detail::int_field(j, "length", ctx)};
  }
  if (shape == "regular") {
    detail::expect_keys(j, {"shape", "valence", "depth"}, ctx);
    return RegularShape{detail::int_field(j, "valence", ctx),
                        detail::int_field(j, "depth", ctx)};
  }
  if (shape == "explicit") {
    detail::expect_keys(j, {"shape", "edges"}, ctx);
    if (!j.contains("edges") || !j["edges"].is_array())
      throw ConfigError(ctx + ": explicit shape needs an \"edges\" array");
    ExplicitShape out;
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2)
        throw ConfigError(ctx + ": each edge must be a [u, v] pair");
      out.edges.push_back({e[0].get<int>(), e[1].get<int>(), 1});
    }
    if (out.edges.empty())
      throw ConfigError(ctx + ": empty Bass-Serre tree rejected");
    return out;
  }
  throw ConfigError(ctx + ": shape must be path, regular or explicit");
}

inline InstanceConfig parse_config(const nlohmann::json& j) {
  detail::expect_keys(j,
                      {"name", "bs_tree", "piece_kind", "radii", "margin",
                       "sample_count", "seed", "negative_control"},
                      "config");
  InstanceConfig cfg;
  if (j.contains("name")) cfg.name = j["name"].get<std::string>();
  if (!j.contains("bs_tree")) throw ConfigError("config: missing \"bs_tree\"");
  cfg.bs_shape = parse_tree_shape(j["bs_tree"], "bs_tree");
  if (j.contains("piece_kind")) {
    const std::string k = j["piece_kind"].get<std::string>();
    if (k == "synthetic")
      cfg.piece_kind = PieceKind::synthetic;
    else if (k == "pants")
      cfg.piece_kind = PieceKind::pants;
    else
      throw ConfigError("config: piece_kind must be synthetic or pants");
  }
  if (!j.contains("radii")) throw ConfigError("config: missing \"radii\"");
  detail::expect_keys(j["radii"], {"base", "line", "z"}, "radii");
  cfg.radii.base = detail::int_field(j["radii"], "base", "radii");
  cfg.radii.line = detail::int_field(j["radii"], "line", "radii");
  cfg.radii.z = detail::int_field(j["radii"], "z", "radii");
  if (j.contains("margin")) cfg.margin = detail::int_field(j, "margin", "config");
  if (j.contains("sample_count"))
    cfg.sample_count = detail::int_field(j, "sample_count", "config");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ConfigError("config: seed must be an integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("negative_control")) {
    const std::string k = j["negative_control"].get<std::string>();
    if (k == "none")
      cfg.negative_control = NegativeControl::none;
    else if (k == "broken_shadow")
      cfg.negative_control = NegativeControl::broken_shadow;
    else if (k == "missing_gluing")
      cfg.negative_control = NegativeControl::missing_gluing;
    else
      throw ConfigError("config: unknown negative_control \"" + k + "\"");
  }
  cfg.validate();
  return cfg;
}

// Deterministic instance generator. The line-assignment policy picks, per
// incident edge, a geodesic through the base-tree center whose two branch
// directions are a seeded choice; on a path-shaped base this is the
// identity or the reflection line.
inline std::pair<BassSerreTree, std::vector<Piece>> generate_instance(
    const InstanceConfig& cfg) {
  cfg.validate();
  BassSerreTree bs{build_tree(cfg.bs_shape)};
  std::vector<Piece> pieces;
  for (int v = 0; v < bs.vertex_count(); ++v) {
    std::vector<int> incident;
    for (int w : bs.neighbors_sorted(v)) incident.push_back(bs.edge_id(v, w));
    std::sort(incident.begin(), incident.end());
    if (incident.empty())
      incident = {-1};  // single-piece instance keeps one unglued line
    if (cfg.piece_kind == PieceKind::pants) {
      if (incident.size() > 3)
        throw ConfigError("pants piece cannot host " +
                          std::to_string(incident.size()) + " boundary lines");
      pieces.push_back(make_pants_piece(incident, cfg.radii.line));
      continue;
    }
    auto rng = seeded_rng(cfg.seed, 0x11CE5 + static_cast<std::uint64_t>(v));
    MetricTree base = MetricTree::path(2 * cfg.radii.base + 1);
    const int center = cfg.radii.base;
    std::vector<std::int64_t> labels(base.vertex_count());
    for (int b = 0; b < base.vertex_count(); ++b) labels[b] = b - center;
    std::vector<std::pair<int, TreeLine>> assignment;
    bool broken = false;
    for (std::size_t s = 0; s < incident.size(); ++s) {
      const int dir = (rng() & 1) ? 1 : -1;
      std::vector<int> verts;
      for (int t = -cfg.radii.line; t <= cfg.radii.line; ++t)
        verts.push_back(center + dir * t);
      if (cfg.negative_control == NegativeControl::broken_shadow && v == 0 &&
          s == 0) {
        std::swap(verts[cfg.radii.line], verts[cfg.radii.line + 1]);
        assignment.push_back({incident[s], TreeLine::unchecked(verts, 1)});
        broken = true;
        continue;
      }
      assignment.push_back(
          {incident[s], TreeLine::from_vertices(base, verts, 1)});
    }
    pieces.push_back(make_synthetic_piece(std::move(base), center,
                                          cfg.radii.base, assignment,
                                          /*validate=*/!broken,
                                          std::move(labels)));
  }
  return {std::move(bs), std::move(pieces)};
}

// Named fixtures used across the test and acceptance suites.
inline InstanceConfig instance_a_config(int r = 8) {
  InstanceConfig cfg;
  cfg.name = "instance-a";
  cfg.bs_shape = PathShape{3};
  cfg.radii = {r, r, r};
  cfg.margin = 2;
  cfg.sample_count = 500;
  cfg.seed = 20240;
  return cfg;
}

inline InstanceConfig instance_b_config(int r = 6) {
  InstanceConfig cfg;
  cfg.name = "instance-b";
  cfg.bs_shape = RegularShape{3, 2};
  cfg.radii = {r, r, r};
  cfg.margin = 2;
  cfg.sample_count = 500;
  cfg.seed = 20241;
  return cfg;
}

}  // namespace fliptrees
