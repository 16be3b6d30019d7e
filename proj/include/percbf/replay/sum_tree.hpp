#pragma once

#include "percbf/common.hpp"

#include <cstddef>
#include <vector>

namespace percbf {

/**
 * Sum tree over non-negative leaf values for O(log n) proportional sampling.
 *
 * Flat 1-indexed layout padded to a power of two:
 *   - nodes_[1] is the root (total sum)
 *   - leaves live at [leaf_base_, 2 * leaf_base_)
 *   - node i has children 2i and 2i + 1
 *
 * Padding keeps in-order leaf traversal equal to index order, so a leaf's
 * sampling interval is [prefix_sum(i), prefix_sum(i) + value(i)).
 * Parents are recomputed as left + right (never by delta), which keeps the
 * parent-sum invariant exact under any update sequence.
 */
template <typename T = double>
class SumTree {
 public:
  explicit SumTree(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("SumTree capacity must be positive");
    leaf_base_ = 1;
    while (leaf_base_ < capacity) leaf_base_ <<= 1;
    nodes_.assign(2 * leaf_base_, T{0});
  }

  std::size_t capacity() const { return capacity_; }

  T total() const { return nodes_[1]; }

  T leaf(std::size_t i) const {
    check_index(i);
    return nodes_[leaf_base_ + i];
  }

  /// Writes a leaf and re-sums its ancestors. Touches depth + 1 nodes.
  void set(std::size_t i, T value) {
    check_index(i);
    if (!(value >= T{0})) throw Error("SumTree leaf values must be non-negative");
    std::size_t node = leaf_base_ + i;
    nodes_[node] = value;
    touched_ = 1;
    for (node >>= 1; node >= 1; node >>= 1) {
      nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
      ++touched_;
    }
  }

  /// Descends from the root with xi in [0, total()). Left if xi < left sum,
  /// otherwise subtract the left sum and go right.
  std::size_t find(T xi) const {
    std::size_t node = 1;
    while (node < leaf_base_) {
      const std::size_t left = 2 * node;
      const T left_sum = nodes_[left];
      if (xi < left_sum) {
        node = left;
      } else if (nodes_[left + 1] > T{0}) {
        xi -= left_sum;
        node = left + 1;
      } else {
        // Rounding pushed xi past the last non-empty subtree.
        xi = left_sum;
        node = left;
      }
    }
    return node - leaf_base_;
  }

  /// Number of node writes performed by the last set().
  std::size_t last_touch_count() const { return touched_; }

  /// Max |parent - (left + right)| over all internal nodes.
  T max_parent_sum_error() const {
    T worst{0};
    for (std::size_t node = 1; node < leaf_base_; ++node) {
      const T err = std::abs(nodes_[node] - (nodes_[2 * node] + nodes_[2 * node + 1]));
      if (err > worst) worst = err;
    }
    return worst;
  }

  std::size_t depth() const {
    std::size_t d = 0;
    for (std::size_t n = leaf_base_; n > 1; n >>= 1) ++d;
    return d;
  }

 private:
  void check_index(std::size_t i) const {
    if (i >= capacity_) throw IndexError("SumTree leaf index out of range: " + std::to_string(i));
  }

  std::size_t capacity_;
  std::size_t leaf_base_ = 1;
  std::vector<T> nodes_;
  std::size_t touched_ = 0;
};

}  // namespace percbf
