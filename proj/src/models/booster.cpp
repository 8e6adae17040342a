#include "aqicast/models/booster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "aqicast/error.hpp"
#include "aqicast/json_util.hpp"

namespace aqicast::models {
namespace {

bool better(double score, double best) { return score > best + 1e-12 * std::abs(best) + 1e-300; }

double rmse(std::span<const double> y, std::span<const double> pred) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - pred[i]) * (y[i] - pred[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

int build_expanded(const ObliviousTree& tree, std::size_t level, std::size_t prefix, std::vector<TreeNode>& nodes) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (level == tree.depth()) {
    nodes[id].value = tree.leaf_values[prefix];
    return id;
  }
  nodes[id].feature = tree.features[level];
  nodes[id].threshold = tree.thresholds[level];
  const int l = build_expanded(tree, level + 1, prefix, nodes);
  const int r = build_expanded(tree, level + 1, prefix | (std::size_t{1} << level), nodes);
  nodes[id].left = l;
  nodes[id].right = r;
  return id;
}

}  // namespace

DecisionTree ObliviousTree::to_decision_tree() const {
  std::vector<TreeNode> nodes;
  build_expanded(*this, 0, 0, nodes);
  return DecisionTree(std::move(nodes));
}

nlohmann::json ObliviousTree::to_json() const {
  return {{"features", features}, {"thresholds", thresholds}, {"leaf_values", leaf_values}};
}

ObliviousTree ObliviousTree::from_json(const nlohmann::json& doc) {
  ObliviousTree t;
  t.features = doc.at("features").get<std::vector<int>>();
  t.thresholds = doc.at("thresholds").get<std::vector<double>>();
  t.leaf_values = doc.at("leaf_values").get<std::vector<double>>();
  if (t.thresholds.size() != t.features.size() || t.leaf_values.size() != (std::size_t{1} << t.features.size())) {
    throw ConfigError("oblivious tree arrays have inconsistent lengths");
  }
  return t;
}

ObliviousTree fit_oblivious_tree(const Matrix& X, std::span<const double> target, std::span<const std::size_t> rows,
                                 std::size_t depth) {
  if (rows.empty()) throw DataError("cannot fit an oblivious tree on zero rows");
  if (depth == 0 || depth > 16) throw ConfigError("oblivious tree depth must be in [1, 16]");
  const std::size_t d = X.cols();
  const std::size_t n = X.rows();

  std::vector<char> in_sample(n, 0);
  for (std::size_t r : rows) in_sample[r] = 1;

  // Sorted in-sample rows per feature.
  std::vector<std::vector<std::size_t>> order(d);
  for (std::size_t f = 0; f < d; ++f) {
    auto& o = order[f];
    for (std::size_t r = 0; r < n; ++r) {
      if (in_sample[r]) o.push_back(r);
    }
    std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return X(a, f) < X(b, f); });
  }

  ObliviousTree tree;
  std::vector<std::size_t> group(n, 0);
  for (std::size_t level = 0; level < depth; ++level) {
    const std::size_t groups = std::size_t{1} << level;
    std::vector<double> total_sum(groups, 0.0);
    std::vector<std::size_t> total_count(groups, 0);
    for (std::size_t r = 0; r < n; ++r) {
      if (!in_sample[r]) continue;
      total_sum[group[r]] += target[r];
      ++total_count[group[r]];
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<double> left_sum(groups);
    std::vector<std::size_t> left_count(groups);

    for (std::size_t f = 0; f < d; ++f) {
      const auto& o = order[f];
      std::fill(left_sum.begin(), left_sum.end(), 0.0);
      std::fill(left_count.begin(), left_count.end(), 0);
      auto term = [&](std::size_t g) {
        double t = 0.0;
        const std::size_t nr = total_count[g] - left_count[g];
        if (left_count[g]) t += left_sum[g] * left_sum[g] / static_cast<double>(left_count[g]);
        if (nr) {
          const double sr = total_sum[g] - left_sum[g];
          t += sr * sr / static_cast<double>(nr);
        }
        return t;
      };
      double score = 0.0;
      for (std::size_t g = 0; g < groups; ++g) score += term(g);
      for (std::size_t i = 0; i + 1 < o.size(); ++i) {
        const std::size_t r = o[i];
        const std::size_t g = group[r];
        score -= term(g);
        left_sum[g] += target[r];
        ++left_count[g];
        score += term(g);
        const double a = X(r, f), b = X(o[i + 1], f);
        if (a == b) continue;
        if (best_feature < 0 || better(score, best_score)) {
          const double mid = a + (b - a) / 2.0;
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = mid < b ? mid : a;
        }
      }
    }

    if (best_feature < 0) {
      // No feature varies in the sample: send everything left.
      best_feature = 0;
      best_threshold = -std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < n; ++r) best_threshold = std::max(best_threshold, X(r, 0));
    }
    tree.features.push_back(best_feature);
    tree.thresholds.push_back(best_threshold);
    for (std::size_t r = 0; r < n; ++r) {
      group[r] |= static_cast<std::size_t>(X(r, static_cast<std::size_t>(best_feature)) > best_threshold) << level;
    }
  }

  const std::size_t leaves = std::size_t{1} << depth;
  std::vector<double> sum(leaves, 0.0);
  std::vector<std::size_t> count(leaves, 0);
  for (std::size_t r = 0; r < n; ++r) {
    if (!in_sample[r]) continue;
    sum[group[r]] += target[r];
    ++count[group[r]];
  }
  tree.leaf_values.assign(leaves, 0.0);
  for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
    if (count[leaf]) {
      tree.leaf_values[leaf] = sum[leaf] / static_cast<double>(count[leaf]);
      continue;
    }
    // Ancestor at depth k shares the low k bits.
    for (std::size_t k = depth; k-- > 0;) {
      const std::size_t mask = (std::size_t{1} << k) - 1;
      double s = 0.0;
      std::size_t c = 0;
      for (std::size_t j = 0; j < leaves; ++j) {
        if ((j & mask) == (leaf & mask)) {
          s += sum[j];
          c += count[j];
        }
      }
      if (c) {
        tree.leaf_values[leaf] = s / static_cast<double>(c);
        break;
      }
    }
  }
  return tree;
}

TreeShape parse_tree_shape(const std::string& token) {
  if (token == "levelwise" || token == "boost-level") return TreeShape::kLevelwise;
  if (token == "oblivious" || token == "boost-oblivious") return TreeShape::kOblivious;
  throw ConfigError("unknown tree shape '" + token + "'");
}

std::string to_string(TreeShape shape) { return shape == TreeShape::kLevelwise ? "levelwise" : "oblivious"; }

nlohmann::json BoosterParams::to_json() const {
  return {{"iterations", iterations}, {"learning_rate", learning_rate},       {"depth", depth},
          {"shape", to_string(shape)}, {"subsample", subsample},              {"tolerance", tolerance},
          {"min_samples_leaf", min_samples_leaf}, {"seed", seed},             {"loss_function", "RMSE"}};
}

BoosterParams BoosterParams::from_json(const nlohmann::json& doc, TreeShape shape) {
  BoosterParams p;
  p.shape = shape;
  for (const auto& [key, value] : doc.items()) {
    if (key == "iterations" || key == "n_estimators") {
      p.iterations = json_count(value, "booster parameter '" + key + "'");
    } else if (key == "learning_rate") {
      p.learning_rate = value.get<double>();
    } else if (key == "depth" || key == "max_depth") {
      p.depth = json_count(value, "booster parameter '" + key + "'");
    } else if (key == "shape") {
      p.shape = parse_tree_shape(value.get<std::string>());
    } else if (key == "subsample") {
      p.subsample = value.get<double>();
    } else if (key == "tolerance") {
      p.tolerance = value.get<double>();
    } else if (key == "min_samples_leaf") {
      p.min_samples_leaf = json_count(value, "booster parameter '" + key + "'");
    } else if (key == "seed" || key == "random_seed" || key == "random_state") {
      p.seed = json_count(value, "booster parameter '" + key + "'");
    } else if (key == "loss_function") {
      if (value.get<std::string>() != "RMSE") throw ConfigError("only the RMSE loss is supported");
    } else {
      throw ConfigError("unknown booster parameter '" + key + "'");
    }
  }
  p.validate();
  return p;
}

void BoosterParams::validate() const {
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (depth < 1 || depth > 16) throw ConfigError("depth must be in [1, 16]");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("subsample must be in (0, 1]");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
}

double BoosterModel::predict_row(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& tree : trees) {
    sum += std::visit([&](const auto& t) { return t.predict_row(x); }, tree);
  }
  return base_score + params.learning_rate * sum;
}

std::vector<double> BoosterModel::predict(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_row(X.row(r));
  return out;
}

BoosterModel fit_booster(const FeatureFrame& frame, std::span<const double> y, const BoosterParams& params) {
  params.validate();
  check_training_data(frame.X, y);
  const Matrix& X = frame.X;
  const std::size_t n = X.rows();

  BoosterModel model;
  model.schema = frame.schema;
  model.params = params;
  model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  std::vector<double> pred(n, model.base_score), residual(n), next(n);
  double current = rmse(y, pred);
  model.train_rmse.push_back(current);

  const std::size_t sample_size =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);

  for (std::size_t it = 0; it < params.iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - pred[i];

    std::vector<std::size_t> rows = all;
    if (sample_size < n) {
      Rng rng = Rng::substream(params.seed, "booster", it);
      for (std::size_t i = 0; i < sample_size; ++i) std::swap(rows[i], rows[i + rng.below(n - i)]);
      rows.resize(sample_size);
      std::sort(rows.begin(), rows.end());
    }

    BoostedTree tree;
    if (params.shape == TreeShape::kOblivious) {
      tree = fit_oblivious_tree(X, residual, rows, params.depth);
    } else {
      tree = fit_tree_rows(X, residual, rows, TreeParams{params.depth, params.min_samples_leaf, std::nullopt}, nullptr);
    }
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = pred[i] + params.learning_rate * std::visit([&](const auto& t) { return t.predict_row(X.row(i)); }, tree);
    }
    const double updated = rmse(y, next);
    if (current - updated <= params.tolerance) break;
    pred.swap(next);
    current = updated;
    model.trees.push_back(std::move(tree));
    model.train_rmse.push_back(current);
  }
  return model;
}

}  // namespace aqicast::models
