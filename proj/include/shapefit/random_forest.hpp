// Copyright 2026 The shapefit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHAPEFIT_RANDOM_FOREST_HPP
#define SHAPEFIT_RANDOM_FOREST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shapefit/error.hpp"
#include "shapefit/parallel.hpp"
#include "shapefit/random.hpp"

namespace shapefit {

/// Row-major feature matrix with binary labels (1 = border).
struct SampleMatrix {
  std::size_t n_features = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> labels;

  std::size_t rows() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * n_features, n_features};
  }
  void push_back(std::span<const double> x, bool positive) {
    if (x.size() != n_features) throw DataError("sample has the wrong feature count");
    values.insert(values.end(), x.begin(), x.end());
    labels.push_back(positive ? 1 : 0);
  }
};

struct ForestParams {
  std::size_t n_trees = 32;
  std::size_t min_node_size = 5;  ///< nodes with fewer samples become leaves
  std::size_t max_depth = 25;
  std::size_t max_features = 0;  ///< split candidates per node; 0 = ceil(sqrt(n_features))
  bool bootstrap = true;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Flat decision tree; node 0 is the root. Internal nodes send x[feature] <=
/// threshold to `left`.
struct DecisionTree {
  struct Node {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    double positive_fraction = 0.0;
    std::uint32_t sample_count = 0;

    bool is_leaf() const { return feature < 0; }
  };

  std::vector<Node> nodes;

  const Node& leaf_for(std::span<const double> x) const {
    const Node* n = &nodes.front();
    while (!n->is_leaf())
      n = &nodes[x[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right];
    return *n;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [i, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[i].is_leaf()) {
        stack.push_back({nodes[i].left, d + 1});
        stack.push_back({nodes[i].right, d + 1});
      }
    }
    return best;
  }
};

struct Forest {
  static constexpr int kFormatVersion = 1;

  std::vector<DecisionTree> trees;
  std::size_t n_features = 0;
  /// Optional descriptor names, one per feature, recorded for consumers.
  std::vector<std::string> feature_names;
  ForestParams params;
  std::uint64_t seed = 0;
};

enum class VoteMode {
  leaf_mean,  ///< mean of reached-leaf border fractions
  hard_vote,  ///< fraction of trees whose reached leaf is majority border
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const SampleMatrix& data, const ForestParams& params, std::size_t mtry,
              std::uint64_t stream_seed)
      : data_(data), params_(params), mtry_(mtry), rng_(stream_seed),
        feature_order_(data.n_features) {
    std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
  }

  DecisionTree build() {
    const std::size_t n = data_.rows();
    indices_.resize(n);
    if (params_.bootstrap) {
      for (auto& i : indices_) i = static_cast<std::uint32_t>(rng_.index(n));
    } else {
      std::iota(indices_.begin(), indices_.end(), std::uint32_t{0});
    }
    grow(0, n, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;
  };

  std::uint32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const std::size_t n = end - begin;
    std::size_t positives = 0;
    for (std::size_t i = begin; i < end; ++i) positives += data_.labels[indices_[i]];

    const bool pure = positives == 0 || positives == n;
    Split split;
    if (!pure && n >= params_.min_node_size && depth < params_.max_depth)
      split = best_split(begin, end);
    if (split.feature < 0) {
      auto& leaf = tree_.nodes[id];
      leaf.positive_fraction = static_cast<double>(positives) / static_cast<double>(n);
      leaf.sample_count = static_cast<std::uint32_t>(n);
      return id;
    }

    const auto f = static_cast<std::size_t>(split.feature);
    auto mid = std::partition(indices_.begin() + static_cast<std::ptrdiff_t>(begin),
                              indices_.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](std::uint32_t s) { return value(s, f) <= split.threshold; });
    const auto cut = static_cast<std::size_t>(mid - indices_.begin());
    const std::uint32_t left = grow(begin, cut, depth + 1);
    const std::uint32_t right = grow(cut, end, depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  double value(std::uint32_t sample, std::size_t f) const {
    return data_.values[static_cast<std::size_t>(sample) * data_.n_features + f];
  }

  // Maximizes sum over children of (p^2 + q^2) / n, which is equivalent to
  // minimizing the size-weighted Gini impurity. Ties go to the lower feature
  // index, then the lower threshold.
  Split best_split(std::size_t begin, std::size_t end) {
    for (std::size_t k = 0; k < mtry_; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng_.index(feature_order_.size() - k));
      std::swap(feature_order_[k], feature_order_[j]);
    }
    Split best;
    const std::size_t n = end - begin;
    std::size_t total_pos = 0;
    for (std::size_t i = begin; i < end; ++i) total_pos += data_.labels[indices_[i]];
    scratch_.resize(n);
    for (std::size_t k = 0; k < mtry_; ++k) {
      const std::size_t f = feature_order_[k];
      for (std::size_t i = 0; i < n; ++i) {
        const auto s = indices_[begin + i];
        scratch_[i] = {value(s, f), data_.labels[s]};
      }
      std::sort(scratch_.begin(), scratch_.end());
      std::size_t left_pos = 0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_pos += scratch_[i].second;
        const double a = scratch_[i].first, b = scratch_[i + 1].first;
        if (!(a < b)) continue;
        const double nl = static_cast<double>(i + 1), nr = static_cast<double>(n - i - 1);
        const double pl = static_cast<double>(left_pos), ql = nl - pl;
        const double pr = static_cast<double>(total_pos - left_pos), qr = nr - pr;
        const double score = (pl * pl + ql * ql) / nl + (pr * pr + qr * qr) / nr;
        double threshold = a + (b - a) / 2.0;
        if (!(threshold < b)) threshold = a;
        const int fi = static_cast<int>(f);
        if (score > best.score ||
            (score == best.score &&
             (fi < best.feature || (fi == best.feature && threshold < best.threshold)))) {
          best = {fi, threshold, score};
        }
      }
    }
    return best;
  }

  const SampleMatrix& data_;
  const ForestParams& params_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<std::size_t> feature_order_;
  std::vector<std::uint32_t> indices_;
  std::vector<std::pair<double, std::uint8_t>> scratch_;
  DecisionTree tree_;
};

}  // namespace detail

/// Bagged Gini trees. Tree t uses stream t of `seed`, so the result does not
/// depend on `threads` (0 = all hardware threads).
inline Forest train_forest(const SampleMatrix& data, const ForestParams& params,
                           std::uint64_t seed, std::size_t threads = 0) {
  if (data.n_features == 0) throw TrainingError("samples have no features");
  if (data.values.size() != data.rows() * data.n_features)
    throw TrainingError("sample matrix is ragged");
  if (data.rows() < 2) throw TrainingError("need at least 2 samples");
  const auto positives = std::count(data.labels.begin(), data.labels.end(), std::uint8_t{1});
  if (positives == 0 || static_cast<std::size_t>(positives) == data.rows())
    throw TrainingError("training samples contain a single class");
  if (params.n_trees < 1) throw ConfigError("forest needs at least one tree");
  if (params.min_node_size < 1) throw ConfigError("minimum node size must be >= 1");
  if (params.max_depth < 1) throw ConfigError("maximum depth must be >= 1");
  for (double v : data.values)
    if (!std::isfinite(v)) throw TrainingError("non-finite feature value");

  std::size_t mtry = params.max_features;
  if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(data.n_features))));
  mtry = std::min(mtry, data.n_features);

  Forest forest;
  forest.n_features = data.n_features;
  forest.params = params;
  forest.params.max_features = mtry;
  forest.seed = seed;
  forest.trees.resize(params.n_trees);
  parallel_for(params.n_trees, threads, [&](std::size_t t) {
    forest.trees[t] = detail::TreeBuilder(data, forest.params, mtry, derive_stream(seed, t)).build();
  });
  return forest;
}

inline double predict_proba(const Forest& forest, std::span<const double> x,
                            VoteMode mode = VoteMode::leaf_mean) {
  if (x.size() != forest.n_features)
    throw ParameterError("expected " + std::to_string(forest.n_features) + " features, got " +
                         std::to_string(x.size()));
  if (forest.trees.empty()) throw ParameterError("forest has no trees");
  double acc = 0.0;
  for (const auto& tree : forest.trees) {
    const double f = tree.leaf_for(x).positive_fraction;
    acc += mode == VoteMode::leaf_mean ? f : (f > 0.5 ? 1.0 : 0.0);
  }
  return acc / static_cast<double>(forest.trees.size());
}

// Serialization: {version, n_trees, n_features, [features], params, seed, trees}. Nodes
// are nested records: {"feature", "threshold", "left", "right"} or
// {"leaf": fraction, "count": n}.

namespace detail {

inline nlohmann::ordered_json node_to_json(const DecisionTree& tree, std::uint32_t id) {
  const auto& n = tree.nodes[id];
  nlohmann::ordered_json j;
  if (n.is_leaf()) {
    j["leaf"] = n.positive_fraction;
    j["count"] = n.sample_count;
  } else {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_to_json(tree, n.left);
    j["right"] = node_to_json(tree, n.right);
  }
  return j;
}

inline std::uint32_t node_from_json(const nlohmann::ordered_json& j, DecisionTree& tree,
                                    std::size_t n_features, std::size_t depth) {
  if (depth > 4096) throw DataError("forest tree is too deep");
  const auto id = static_cast<std::uint32_t>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    const double f = j.at("leaf").get<double>();
    if (!(f >= 0.0 && f <= 1.0)) throw DataError("leaf fraction outside [0, 1]");
    tree.nodes[id].positive_fraction = f;
    tree.nodes[id].sample_count = j.at("count").get<std::uint32_t>();
    return id;
  }
  const int feature = j.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= n_features)
    throw DataError("node feature index out of range");
  const double threshold = j.at("threshold").get<double>();
  const std::uint32_t left = node_from_json(j.at("left"), tree, n_features, depth + 1);
  const std::uint32_t right = node_from_json(j.at("right"), tree, n_features, depth + 1);
  auto& node = tree.nodes[id];
  node.feature = feature;
  node.threshold = threshold;
  node.left = left;
  node.right = right;
  return id;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const Forest& forest) {
  nlohmann::ordered_json j;
  j["version"] = Forest::kFormatVersion;
  j["n_trees"] = forest.trees.size();
  j["n_features"] = forest.n_features;
  if (!forest.feature_names.empty()) j["features"] = forest.feature_names;
  j["params"] = {{"min_node_size", forest.params.min_node_size},
                 {"max_depth", forest.params.max_depth},
                 {"max_features", forest.params.max_features},
                 {"bootstrap", forest.params.bootstrap}};
  j["seed"] = forest.seed;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : forest.trees) trees.push_back(detail::node_to_json(t, 0));
  j["trees"] = std::move(trees);
  return j;
}

inline Forest forest_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("version").get<int>() != Forest::kFormatVersion)
      throw DataError("unsupported forest version");
    Forest f;
    f.n_features = j.at("n_features").get<std::size_t>();
    if (j.contains("features")) {
      f.feature_names = j.at("features").get<std::vector<std::string>>();
      if (f.feature_names.size() != f.n_features) throw DataError("forest feature list has the wrong length");
    }
    const auto& p = j.at("params");
    f.params.min_node_size = p.at("min_node_size").get<std::size_t>();
    f.params.max_depth = p.at("max_depth").get<std::size_t>();
    f.params.max_features = p.at("max_features").get<std::size_t>();
    f.params.bootstrap = p.at("bootstrap").get<bool>();
    f.seed = j.at("seed").get<std::uint64_t>();
    const auto& trees = j.at("trees");
    if (trees.size() != j.at("n_trees").get<std::size_t>() || trees.empty())
      throw DataError("forest tree count mismatch");
    f.params.n_trees = trees.size();
    for (const auto& t : trees) {
      DecisionTree tree;
      detail::node_from_json(t, tree, f.n_features, 0);
      f.trees.push_back(std::move(tree));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed forest: ") + e.what());
  }
}

inline std::string serialize(const Forest& forest) { return to_json(forest).dump() + "\n"; }

inline Forest parse_forest(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("forest is not valid JSON: ") + e.what());
  }
  return forest_from_json(j);
}

inline void save_forest(const std::filesystem::path& path, const Forest& forest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize(forest);
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Forest load_forest(const std::filesystem::path& path) {
  return parse_forest(read_text_file(path));
}

}  // namespace shapefit

#endif  // SHAPEFIT_RANDOM_FOREST_HPP
