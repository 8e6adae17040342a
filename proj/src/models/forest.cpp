#include "aqicast/models/forest.hpp"

#include <cmath>
#include <numeric>

#include "aqicast/error.hpp"
#include "aqicast/json_util.hpp"
#include "aqicast/parallel.hpp"

namespace aqicast::models {

MaxFeatures parse_max_features(const std::string& token) {
  if (token == "auto" || token == "1.0" || token == "None") return MaxFeatures::kAuto;
  if (token == "sqrt") return MaxFeatures::kSqrt;
  if (token == "log2") return MaxFeatures::kLog2;
  throw ConfigError("invalid max_features '" + token + "' (expected auto, sqrt or log2)");
}

std::string to_string(MaxFeatures rule) {
  switch (rule) {
    case MaxFeatures::kAuto: return "auto";
    case MaxFeatures::kSqrt: return "sqrt";
    case MaxFeatures::kLog2: return "log2";
  }
  return "auto";
}

std::size_t resolve_max_features(MaxFeatures rule, std::size_t d) {
  if (d == 0) return 0;
  double k = static_cast<double>(d);
  if (rule == MaxFeatures::kSqrt) k = std::ceil(std::sqrt(static_cast<double>(d)));
  if (rule == MaxFeatures::kLog2) k = std::ceil(std::log2(static_cast<double>(d)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(k));
}

nlohmann::json ForestParams::to_json() const {
  nlohmann::json doc{{"n_estimators", n_estimators},
                     {"max_features", to_string(max_features)},
                     {"min_samples_leaf", min_samples_leaf},
                     {"bootstrap", bootstrap},
                     {"seed", seed}};
  doc["max_depth"] = max_depth ? nlohmann::json(*max_depth) : nlohmann::json(nullptr);
  return doc;
}

ForestParams ForestParams::from_json(const nlohmann::json& doc) {
  ForestParams p;
  for (const auto& [key, value] : doc.items()) {
    if (key == "n_estimators") {
      p.n_estimators = json_count(value, "forest parameter '" + key + "'");
    } else if (key == "max_depth") {
      if (value.is_null()) {
        p.max_depth.reset();
      } else {
        p.max_depth = json_count(value, "forest parameter 'max_depth'");
      }
    } else if (key == "max_features") {
      p.max_features = parse_max_features(value.get<std::string>());
    } else if (key == "min_samples_leaf") {
      p.min_samples_leaf = json_count(value, "forest parameter '" + key + "'");
    } else if (key == "bootstrap") {
      p.bootstrap = value.get<bool>();
    } else if (key == "seed" || key == "random_state" || key == "random_seed") {
      p.seed = json_count(value, "forest parameter '" + key + "'");
    } else {
      throw ConfigError("unknown forest parameter '" + key + "'");
    }
  }
  if (p.n_estimators < 1) throw ConfigError("n_estimators must be at least 1");
  if (p.min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
  return p;
}

double ForestModel::predict_row(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict_row(x);
  return sum / static_cast<double>(trees.size());
}

std::vector<double> ForestModel::predict(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict_row(X.row(r));
  return out;
}

ForestModel fit_forest(const FeatureFrame& frame, std::span<const double> y, const ForestParams& params) {
  if (params.n_estimators < 1) throw ConfigError("n_estimators must be at least 1");
  check_training_data(frame.X, y);
  const std::size_t n = frame.X.rows();

  ForestModel model;
  model.schema = frame.schema;
  model.params = params;
  model.trees.resize(params.n_estimators);
  model.bootstrap_indices.resize(params.n_estimators);

  TreeParams tree_params{params.max_depth, params.min_samples_leaf,
                         resolve_max_features(params.max_features, frame.X.cols())};

  parallel_for(params.n_estimators, params.threads, [&](std::size_t k) {
    Rng rng = Rng::substream(params.seed, "forest", k);
    std::vector<std::size_t> rows(n);
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
      model.bootstrap_indices[k] = rows;
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    model.trees[k] = fit_tree_rows(frame.X, y, rows, tree_params, &rng);
  });
  return model;
}

}  // namespace aqicast::models
