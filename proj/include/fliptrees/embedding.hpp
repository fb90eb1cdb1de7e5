#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fliptrees/complex.hpp"
#include "fliptrees/errors.hpp"
#include "fliptrees/quotient.hpp"
#include "fliptrees/types.hpp"

namespace fliptrees {

// Image of a complex vertex under the product map: a T0 vertex and one
// class in each quotient tree.
struct ProductPoint {
  int t0 = 0;
  int c1 = 0;
  int c2 = 0;

  bool operator==(const ProductPoint&) const = default;
};

// The instantiated inequality set. Lower direction:
//   d <= d1 + d2 + 2 mu d0 + 4 mu,
// upper direction: d_i <= lip * d for i in {1,2} and d0 <= d / rho_hat + 1.
struct InstanceConstants {
  int mu = 1;
  int lip = 1;
  Dist rho_hat = 1;

  Dist lower_rhs(Dist d0, Dist d1, Dist d2) const {
    return d1 + d2 + 2 * static_cast<Dist>(mu) * d0 + 4 * static_cast<Dist>(mu);
  }
  bool lower_ok(Dist d, Dist d0, Dist d1, Dist d2) const {
    return d <= lower_rhs(d0, d1, d2);
  }
  bool upper_fi_ok(Dist di, Dist d) const {
    return di <= static_cast<Dist>(lip) * d;
  }
  bool upper_f0_ok(Dist d0, Dist d) const {
    return rho_hat * (d0 - 1) <= d;  // d0 <= d / rho_hat + 1, exactly
  }
  // Multiplicative envelope implied by the upper bounds for d >= 1.
  double envelope_multiplicative() const {
    return 2.0 * lip + 1.0 / static_cast<double>(rho_hat) + 1.0;
  }
};

inline InstanceConstants theoretical_constants(const TotalComplex& c) {
  return {c.mu(), c.lip(), c.rho_hat()};
}

// f0: the piece of the canonical representative, so glued boundary points
// resolve to the smaller piece id.
inline int f0(const TotalComplex& c, std::int64_t x) { return c.rep(x).piece; }

// f_i on an explicitly chosen description and (for the opposite-parity
// case) an explicitly chosen neighbour; the audits use this to certify
// representation- and neighbour-independence.
inline int fi_via(const TotalComplex& c, const QuotientTree& q,
                  const ComplexVertex& desc, std::optional<int> neighbor = {}) {
  const BassSerreTree& bs = c.bs();
  if (bs.parity(desc.piece) == q.parity()) {
    // Same parity: retract the first factor, drop the fiber.
    return q.class_of(desc.piece, c.piece(desc.piece).retract(desc.point));
  }
  const QuotientTree::Junction* junction = q.junction_for(desc.piece);
  if (junction == nullptr)
    throw TruncationError("piece " + std::to_string(desc.piece) +
                          " has no glued line of parity " +
                          std::to_string(q.parity()));
  if (desc.z < -junction->window || desc.z > junction->window)
    throw TruncationError("fiber coordinate " + std::to_string(desc.z) +
                          " outside the glued window");
  if (neighbor) {
    // Same class for every neighbour; certified by the audits.
    const Piece& p = c.piece(*neighbor);
    const int slot = p.slot_for_edge(bs.edge_id(*neighbor, desc.piece));
    return q.class_of(*neighbor, p.line(slot).shadow.at(desc.z));
  }
  return junction->classes[desc.z + junction->window];
}

// f_i evaluated at a canonical vertex through its representative.
inline int fi(const TotalComplex& c, const QuotientTree& q, std::int64_t x) {
  return fi_via(c, q, c.rep(x));
}

inline ProductPoint embed(const TotalComplex& c, const QuotientTree& q1,
                          const QuotientTree& q2, std::int64_t x) {
  return {f0(c, x), fi(c, q1, x), fi(c, q2, x)};
}

// l^1 product metric: every inequality in the suite stays integer-exact.
inline Dist product_distance(const TotalComplex& c, const QuotientTree& q1,
                             const QuotientTree& q2, const ProductPoint& p,
                             const ProductPoint& r) {
  return c.bs().tree().distance(p.t0, r.t0) + q1.distance(p.c1, r.c1) +
         q2.distance(p.c2, r.c2);
}

}  // namespace fliptrees
