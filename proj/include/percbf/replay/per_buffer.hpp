#pragma once

#include "percbf/common.hpp"
#include "percbf/replay/sum_tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace percbf {

struct PerParams {
  std::size_t capacity = 1'000'000;
  double alpha_p = 1.0;   // 0 -> uniform, 1 -> fully proportional
  double epsilon = 1e-6;  // fake-priority increment
  double initial_p_max = 1.0;
};

template <typename Item>
struct Sampled {
  std::size_t index;
  const Item* item;
};

/**
 * Proportional prioritized replay buffer over a ring of items.
 *
 * The tree stores transformed priorities p^alpha_p; raw priorities are kept
 * alongside for export. New items receive the fake priority p_max + epsilon,
 * and p_max tracks every raw priority ever written (fake ones included), so a
 * freshly pushed item always holds the strict maximum for alpha_p > 0.
 */
template <typename Item>
class PerBuffer {
 public:
  explicit PerBuffer(PerParams params = {})
      : params_(params), tree_(params.capacity), p_max_(params.initial_p_max) {
    if (params_.alpha_p < 0.0 || params_.alpha_p > 1.0)
      throw ConfigError("alpha_p must lie in [0, 1]");
    if (!(params_.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    items_.reserve(std::min<std::size_t>(params_.capacity, 4096));
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::size_t capacity() const { return params_.capacity; }
  double alpha_p() const { return params_.alpha_p; }
  double epsilon() const { return params_.epsilon; }
  double p_max() const { return p_max_; }
  const SumTree<double>& tree() const { return tree_; }

  const Item& item(std::size_t i) const {
    check_occupied(i);
    return items_[i];
  }
  double raw_priority(std::size_t i) const {
    check_occupied(i);
    return raw_[i];
  }

  std::size_t push(Item item) {
    const std::size_t slot = cursor_;
    if (slot < items_.size()) {
      items_[slot] = std::move(item);
      raw_[slot] = 0.0;
    } else {
      items_.push_back(std::move(item));
      raw_.push_back(0.0);
    }
    cursor_ = (cursor_ + 1) % params_.capacity;
    write(slot, p_max_ + params_.epsilon);
    return slot;
  }

  double total_priority() const { return empty() ? 0.0 : tree_.total(); }

  /// Leaf whose cumulative interval contains xi in [0, total_priority()).
  std::size_t find(double xi) const {
    if (empty()) throw EmptyBufferError("sample from empty replay buffer");
    return tree_.find(xi);
  }

  std::vector<Sampled<Item>> sample(std::size_t batch, Rng& rng) const {
    if (empty()) throw EmptyBufferError("sample from empty replay buffer");
    const double total = tree_.total();
    if (!(total > 0.0)) throw ZeroPriorityError("replay buffer has zero total priority");
    std::vector<Sampled<Item>> out;
    out.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t i = tree_.find(uniform01(rng) * total);
      out.push_back({i, &items_[i]});
    }
    return out;
  }

  void update_priorities(std::span<const std::size_t> indices, std::span<const double> raw) {
    if (indices.size() != raw.size())
      throw ShapeError("update_priorities: indices and priorities differ in length");
    for (std::size_t k = 0; k < indices.size(); ++k) {
      check_occupied(indices[k]);
      if (!(raw[k] >= 0.0)) throw Error("priorities must be non-negative");
    }
    for (std::size_t k = 0; k < indices.size(); ++k) write(indices[k], raw[k]);
  }

 private:
  void write(std::size_t i, double raw) {
    raw_[i] = raw;
    p_max_ = std::max(p_max_, raw);
    tree_.set(i, std::pow(raw, params_.alpha_p));
  }

  void check_occupied(std::size_t i) const {
    if (i >= items_.size())
      throw IndexError("replay index " + std::to_string(i) + " is not occupied");
  }

  PerParams params_;
  SumTree<double> tree_;
  std::vector<Item> items_;
  std::vector<double> raw_;
  std::size_t cursor_ = 0;
  double p_max_;
};

}  // namespace percbf
