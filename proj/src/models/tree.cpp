#include "aqicast/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aqicast/error.hpp"

namespace aqicast::models {
namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Gains within this relative distance are treated as equal, so the earlier
/// (lower feature, lower threshold) candidate wins deterministically.
bool better(double gain, double best) { return gain > best * (1.0 + 1e-12) + 1e-300; }

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

class Builder {
 public:
  Builder(const Matrix& X, std::span<const double> y, const TreeParams& params, Rng* rng)
      : X_(X), y_(y), params_(params), rng_(rng) {
    const std::size_t d = X.cols();
    n_features_ = params.max_features ? std::clamp<std::size_t>(*params.max_features, 1, d) : d;
    features_.resize(d);
    std::iota(features_.begin(), features_.end(), 0);
  }

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t> rows, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    double sum = 0.0;
    for (std::size_t r : rows) sum += y_[r];
    const double mean = sum / static_cast<double>(rows.size());
    nodes_[id].value = mean;
    nodes_[id].samples = rows.size();

    const bool depth_left = !params_.max_depth || depth < *params_.max_depth;
    if (!depth_left || rows.size() < 2 * params_.min_samples_leaf) return id;
    bool pure = true;
    for (std::size_t r : rows) {
      if (y_[r] != y_[rows.front()]) {
        pure = false;
        break;
      }
    }
    if (pure) return id;

    const Split split = best_split(rows, mean);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (X_(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    if (n_features_ >= features_.size() || !rng_) return features_;
    std::vector<std::size_t> pool = features_;
    for (std::size_t i = 0; i < n_features_; ++i) {
      std::swap(pool[i], pool[i + rng_->below(pool.size() - i)]);
    }
    pool.resize(n_features_);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  Split best_split(const std::vector<std::size_t>& rows, double mean) {
    const std::size_t n = rows.size();
    const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
    Split best;
    std::vector<std::pair<double, double>> xy(n);
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) xy[i] = {X_(rows[i], f), y_[rows[i]] - mean};
      std::sort(xy.begin(), xy.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      if (xy.front().first == xy.back().first) continue;
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += xy[i].second;
        if (xy[i].first == xy[i + 1].first) continue;
        const std::size_t nl = i + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        // n_l n_r / n (mean_l - mean_r)^2 with centred targets.
        const double ml = left_sum / static_cast<double>(nl);
        const double mr = -left_sum / static_cast<double>(nr);
        const double gain = static_cast<double>(nl) * static_cast<double>(nr) / static_cast<double>(n) * (ml - mr) * (ml - mr);
        if (better(gain, best.gain)) {
          best = {static_cast<int>(f), midpoint(xy[i].first, xy[i + 1].first), gain};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  std::span<const double> y_;
  TreeParams params_;
  Rng* rng_;
  std::size_t n_features_ = 0;
  std::vector<std::size_t> features_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

std::size_t DecisionTree::leaf_of(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return i;
}

std::vector<double> DecisionTree::predict(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_row(X.row(r));
  return out;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

nlohmann::json DecisionTree::to_json() const {
  std::vector<int> feature, left, right;
  std::vector<double> threshold, value;
  std::vector<std::size_t> samples;
  for (const auto& n : nodes_) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    samples.push_back(n.samples);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value},         {"samples", samples}};
}

DecisionTree DecisionTree::from_json(const nlohmann::json& doc) {
  const auto feature = doc.at("feature").get<std::vector<int>>();
  const auto threshold = doc.at("threshold").get<std::vector<double>>();
  const auto left = doc.at("left").get<std::vector<int>>();
  const auto right = doc.at("right").get<std::vector<int>>();
  const auto value = doc.at("value").get<std::vector<double>>();
  const auto samples = doc.at("samples").get<std::vector<std::size_t>>();
  const std::size_t n = feature.size();
  if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
      samples.size() != n) {
    throw ConfigError("tree arrays have inconsistent lengths");
  }
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = {feature[i], threshold[i], left[i], right[i], value[i], samples[i]};
    if (feature[i] >= 0) {
      const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
      if (!in_range(left[i]) || !in_range(right[i])) throw ConfigError("tree child index out of range");
    }
  }
  return DecisionTree(std::move(nodes));
}

DecisionTree fit_tree_rows(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
                           const TreeParams& params, Rng* rng) {
  check_training_data(X, y);
  if (rows.empty()) throw DataError("cannot fit a tree on zero rows");
  if (params.min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be at least 1");
  Builder builder(X, y, params, rng);
  return DecisionTree(builder.build({rows.begin(), rows.end()}));
}

DecisionTree fit_tree(const Matrix& X, std::span<const double> y, const TreeParams& params) {
  std::vector<std::size_t> rows(X.rows());
  std::iota(rows.begin(), rows.end(), 0);
  return fit_tree_rows(X, y, rows, params, nullptr);
}

}  // namespace aqicast::models
