#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fliptrees/embedding.hpp"
#include "fliptrees/errors.hpp"
#include "fliptrees/harness.hpp"
#include "fliptrees/special_path.hpp"

namespace fliptrees {

namespace detail {

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

inline const char* palette(int index) {
  static const char* colors[] = {"lightblue",  "lightsalmon", "palegreen",
                                 "khaki",      "plum",        "lightgrey",
                                 "peachpuff",  "aquamarine",  "mistyrose",
                                 "lightcyan"};
  return colors[index % 10];
}

}  // namespace detail

// Quotient tree with one color per member piece; class labels carry the
// canonical (piece, vertex) representative.
inline std::string quotient_to_dot(const QuotientTree& q,
                                   const std::string& name) {
  std::ostringstream out;
  out << "graph " << name << " {\n  node [style=filled];\n";
  for (int cls = 0; cls < q.class_count(); ++cls) {
    const auto [piece, vert] = q.class_rep(cls);
    out << "  " << cls << " [label=\"" << piece << ":" << vert
        << "\", fillcolor=" << detail::palette(piece) << "];\n";
  }
  if (q.class_count() > 0 && q.connected())
    for (const auto& e : q.tree().edges())
      out << "  " << e.u << " -- " << e.v << " [label=" << e.length << "];\n";
  out << "}\n";
  return out.str();
}

inline std::string complex_edge_list(const TotalComplex& c) {
  std::ostringstream out;
  for (std::int64_t v = 0; v < c.vertex_count(); ++v)
    for (const auto& [w, len] : c.neighbors(v))
      if (v < w) out << v << " " << w << " " << len << "\n";
  return out.str();
}

inline std::string class_audit_csv(const QuotientTree& q) {
  std::ostringstream out;
  out << "class,size,members\n";
  for (int cls = 0; cls < q.class_count(); ++cls) {
    const auto members = q.members_of(cls);
    out << cls << "," << members.size() << ",";
    for (std::size_t i = 0; i < members.size(); ++i)
      out << (i ? ";" : "") << members[i].first << ":" << members[i].second;
    out << "\n";
  }
  return out.str();
}

inline std::string embed_dump_csv(const Instance& inst) {
  std::ostringstream out;
  out << "vertex,t0,t1_rep,t2_rep\n";
  const TotalComplex& c = inst.complex;
  for (std::int64_t v = 0; v < c.vertex_count(); ++v) {
    out << v << "," << f0(c, v) << ",";
    try {
      const int c1 = fi(c, inst.q1, v);
      const auto [p1, b1] = inst.q1.class_rep(c1);
      out << p1 << ":" << b1;
    } catch (const TruncationError&) {
      out << "NA";
    }
    out << ",";
    try {
      const int c2 = fi(c, inst.q2, v);
      const auto [p2, b2] = inst.q2.class_rep(c2);
      out << p2 << ":" << b2;
    } catch (const TruncationError&) {
      out << "NA";
    }
    out << "\n";
  }
  return out.str();
}

// Per-segment ledger of a constructed path, for debugging and reports.
inline nlohmann::json path_ledger_json(const SpecialPath& path) {
  nlohmann::json j;
  j["n"] = path.n;
  j["d0"] = path.d0;
  j["d1"] = path.d1;
  j["d2"] = path.d2;
  j["enter_jump"] = path.enter_jump;
  j["vertical_len"] = path.vertical_len;
  j["total_length"] = path.total_length;
  j["segments"] = nlohmann::json::array();
  for (const auto& seg : path.ledger)
    j["segments"].push_back({{"piece", seg.piece},
                             {"parity", seg.parity},
                             {"start_class", seg.start_class},
                             {"end_class", seg.end_class},
                             {"fiber", seg.fiber},
                             {"horiz_len", seg.horiz_len},
                             {"jump_after", seg.jump_after}});
  return j;
}

// Writes the full artifact set for an instance; returns the file paths.
inline std::vector<std::filesystem::path> export_artifacts(
    const Instance& inst, const std::filesystem::path& outdir) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw Error("cannot create " + outdir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> files;
  const auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = outdir / name;
    detail::write_file(path, content);
    files.push_back(path);
  };
  emit("t0.dot", inst.complex.bs().tree().to_dot("t0"));
  emit("t1.dot", quotient_to_dot(inst.q1, "t1"));
  emit("t2.dot", quotient_to_dot(inst.q2, "t2"));
  emit("complex_edges.txt", complex_edge_list(inst.complex));
  emit("embed.csv", embed_dump_csv(inst));
  emit("t1_classes.csv", class_audit_csv(inst.q1));
  emit("t2_classes.csv", class_audit_csv(inst.q2));
  emit("build_log.txt", inst.build_log);
  return files;
}

}  // namespace fliptrees
