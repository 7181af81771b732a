/*
 * Copyright 2026 The Mirage Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MIRAGE_DETECTORS_TREE_HPP_
#define MIRAGE_DETECTORS_TREE_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mirage/common.hpp"

namespace mirage {

/// Array-backed binary tree shared by all tree ensembles. Internal nodes send
/// x[feature] < threshold left; leaves carry a model-specific value (class-1
/// fraction, boosting weight, or isolation path length).
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  std::vector<TreeNode>& nodes() { return nodes_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  bool empty() const { return nodes_.empty(); }

  std::int32_t add_leaf(double value) {
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, value});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  std::int32_t add_node() {
    nodes_.push_back(TreeNode{});
    return static_cast<std::int32_t>(nodes_.size() - 1);
  }

  const TreeNode& leaf_for(std::span<const double> x) const {
    std::int32_t i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)];
  }

  double predict(std::span<const double> x) const { return leaf_for(x).value; }

  // Edges on the longest root-to-leaf path.
  int depth() const { return nodes_.empty() ? 0 : depth_from(0); }

  // Structural check: children in range, every node reached exactly once.
  bool well_formed() const {
    if (nodes_.empty()) return false;
    std::vector<int> seen(nodes_.size(), 0);
    std::vector<std::int32_t> stack{0};
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size()) return false;
      if (seen[static_cast<std::size_t>(i)]++) return false;
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      if (!n.is_leaf()) {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
    for (int s : seen) {
      if (s != 1) return false;
    }
    return true;
  }

 private:
  int depth_from(std::int32_t i) const {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) return 0;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }

  std::vector<TreeNode> nodes_;
};

/// Common scoring surface of the four ensemble members.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  // Probability-like score in [0, 1] for one standardized feature vector.
  virtual double score(std::span<const double> x) const = 0;

 protected:
  void check_dimension(std::span<const double> x) const {
    if (x.size() != dimension()) {
      throw UsageError(name() + ": expected " + std::to_string(dimension()) +
                       " features, got " + std::to_string(x.size()));
    }
  }
};

}  // namespace mirage

#endif  // MIRAGE_DETECTORS_TREE_HPP_
