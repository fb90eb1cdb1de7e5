#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace fliptrees {

// Union-find with min-id roots: the root of every class is its smallest
// element, so canonical representatives are reproducible across runs.
class UnionFind {
 public:
  explicit UnionFind(std::int64_t n) : parent_(n), classes_(n) {
    std::iota(parent_.begin(), parent_.end(), std::int64_t{0});
  }

  std::int64_t find(std::int64_t x) const {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];  // path halving
      x = parent_[x];
    }
    return x;
  }

  // Returns true if a merge happened.
  bool unite(std::int64_t a, std::int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (a > b) std::swap(a, b);
    parent_[b] = a;
    --classes_;
    return true;
  }

  bool same(std::int64_t a, std::int64_t b) const { return find(a) == find(b); }
  std::int64_t size() const { return static_cast<std::int64_t>(parent_.size()); }
  std::int64_t class_count() const { return classes_; }

 private:
  mutable std::vector<std::int64_t> parent_;
  std::int64_t classes_;
};

}  // namespace fliptrees
