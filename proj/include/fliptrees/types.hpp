#pragma once

#include <cstdint>

namespace fliptrees {

// All model distances are exact integers.
using Dist = std::int64_t;

// Truncation radii of an instance: base-tree radius, boundary-line parameter
// radius and fiber (z) radius. Gluing windows are derived from line and z.
struct Radii {
  int base = 0;
  int line = 0;
  int z = 0;
};

inline int glue_window(const Radii& r) { return r.line < r.z ? r.line : r.z; }

}  // namespace fliptrees
