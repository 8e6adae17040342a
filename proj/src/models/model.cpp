#include "aqicast/models/model.hpp"

#include <fstream>

#include "aqicast/error.hpp"
#include "aqicast/json_util.hpp"

namespace aqicast::models {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

nlohmann::json schema_json(const FeatureSchema& schema) {
  return {{"columns", schema.names}, {"fingerprint", schema.fingerprint_hex()}};
}

FeatureSchema schema_from_json(const nlohmann::json& doc) {
  FeatureSchema schema{doc.at("columns").get<std::vector<std::string>>()};
  if (doc.contains("fingerprint") && doc.at("fingerprint").get<std::string>() != schema.fingerprint_hex()) {
    throw ConfigError("model schema fingerprint does not match its column list");
  }
  return schema;
}

nlohmann::json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from_json(const nlohmann::json& doc) {
  return Matrix(doc.at("rows").get<std::size_t>(), doc.at("cols").get<std::size_t>(),
                doc.at("data").get<std::vector<double>>());
}

TreeParams tree_params_from_json(const nlohmann::json& doc) {
  TreeParams p;
  for (const auto& [key, value] : doc.items()) {
    if (key == "max_depth") {
      if (value.is_null()) {
        p.max_depth.reset();
      } else {
        p.max_depth = json_count(value, "tree parameter 'max_depth'");
      }
    } else if (key == "min_samples_leaf") {
      p.min_samples_leaf = json_count(value, "tree parameter 'min_samples_leaf'");
      if (p.min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be at least 1");
    } else {
      throw ConfigError("unknown tree parameter '" + key + "'");
    }
  }
  return p;
}

nlohmann::json tree_params_json(const TreeParams& p) {
  nlohmann::json doc{{"min_samples_leaf", p.min_samples_leaf}};
  doc["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
  return doc;
}

void require_object(const nlohmann::json& params) {
  if (!params.is_null() && !params.is_object()) throw ConfigError("model parameters must be a JSON object");
}

}  // namespace

Family parse_family(const std::string& token) {
  if (token == "mean") return Family::kMean;
  if (token == "tree") return Family::kTree;
  if (token == "forest") return Family::kForest;
  if (token == "boost-oblivious") return Family::kBoostOblivious;
  if (token == "boost-level") return Family::kBoostLevel;
  if (token == "svr") return Family::kSvr;
  throw ConfigError("unknown model family '" + token +
                    "' (expected mean, tree, forest, boost-oblivious, boost-level or svr)");
}

std::string family_name(Family family) {
  switch (family) {
    case Family::kMean: return "mean";
    case Family::kTree: return "tree";
    case Family::kForest: return "forest";
    case Family::kBoostOblivious: return "boost-oblivious";
    case Family::kBoostLevel: return "boost-level";
    case Family::kSvr: return "svr";
  }
  return "unknown";
}

Family family_of(const Model& model) {
  return std::visit(overloaded{[](const MeanModel&) { return Family::kMean; },
                               [](const TreeModel&) { return Family::kTree; },
                               [](const ForestModel&) { return Family::kForest; },
                               [](const BoosterModel& m) {
                                 return m.params.shape == TreeShape::kOblivious ? Family::kBoostOblivious
                                                                                : Family::kBoostLevel;
                               },
                               [](const SvrModel&) { return Family::kSvr; }},
                    model);
}

Model fit_model(Family family, const nlohmann::json& params, const FeatureFrame& frame, std::span<const double> y,
                std::size_t threads) {
  require_object(params);
  const nlohmann::json p = params.is_null() ? nlohmann::json::object() : params;
  try {
    switch (family) {
      case Family::kMean: {
        check_training_data(frame.X, y);
        if (!p.empty()) throw ConfigError("the mean baseline takes no parameters");
        double sum = 0.0;
        for (double v : y) sum += v;
        return MeanModel{frame.schema, sum / static_cast<double>(y.size())};
      }
      case Family::kTree: {
        const auto tp = tree_params_from_json(p);
        return TreeModel{frame.schema, tp, fit_tree(frame.X, y, tp)};
      }
      case Family::kForest: {
        auto fp = ForestParams::from_json(p);
        fp.threads = threads;
        return fit_forest(frame, y, fp);
      }
      case Family::kBoostOblivious:
        return fit_booster(frame, y, BoosterParams::from_json(p, TreeShape::kOblivious));
      case Family::kBoostLevel:
        return fit_booster(frame, y, BoosterParams::from_json(p, TreeShape::kLevelwise));
      case Family::kSvr:
        return fit_svr(frame, y, SvrParams::from_json(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad " + family_name(family) + " parameters: " + e.what());
  }
  throw ConfigError("unhandled model family");
}

const FeatureSchema& schema_of(const Model& model) {
  return std::visit([](const auto& m) -> const FeatureSchema& { return m.schema; }, model);
}

std::vector<double> predict(const Model& model, const FeatureFrame& frame) {
  schema_of(model).check_compatible(frame.schema);
  return std::visit([&](const auto& m) { return m.predict(frame.X); }, model);
}

nlohmann::json to_json(const Model& model) {
  nlohmann::json doc{{"format", "aqicast-model"},
                     {"version", kModelFormatVersion},
                     {"family", family_name(family_of(model))},
                     {"schema", schema_json(schema_of(model))}};
  std::visit(overloaded{
                 [&](const MeanModel& m) {
                   doc["params"] = nlohmann::json::object();
                   doc["mean"] = m.mean;
                 },
                 [&](const TreeModel& m) {
                   doc["params"] = tree_params_json(m.params);
                   doc["tree"] = m.tree.to_json();
                 },
                 [&](const ForestModel& m) {
                   doc["params"] = m.params.to_json();
                   auto trees = nlohmann::json::array();
                   for (const auto& t : m.trees) trees.push_back(t.to_json());
                   doc["trees"] = std::move(trees);
                   doc["bootstrap_indices"] = m.bootstrap_indices;
                 },
                 [&](const BoosterModel& m) {
                   doc["params"] = m.params.to_json();
                   doc["base_score"] = m.base_score;
                   doc["train_rmse"] = m.train_rmse;
                   auto trees = nlohmann::json::array();
                   for (const auto& t : m.trees) trees.push_back(std::visit([](const auto& x) { return x.to_json(); }, t));
                   doc["trees"] = std::move(trees);
                 },
                 [&](const SvrModel& m) {
                   doc["params"] = m.params.to_json();
                   doc["gamma"] = m.gamma;
                   doc["bias"] = m.bias;
                   doc["objective"] = m.objective;
                   doc["iterations"] = m.iterations;
                   doc["n_train"] = m.n_train;
                   doc["dual_coef"] = m.dual_coef;
                   doc["support_indices"] = m.support_indices;
                   doc["support_vectors"] = matrix_json(m.support_vectors);
                   doc["warnings"] = m.warnings;
                 }},
             model);
  return doc;
}

Model model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", "") != "aqicast-model") throw ConfigError("not an aqicast model file");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw ConfigError("unsupported model format version " + std::to_string(version));
    }
    const Family family = parse_family(doc.at("family").get<std::string>());
    const FeatureSchema schema = schema_from_json(doc.at("schema"));
    switch (family) {
      case Family::kMean:
        return MeanModel{schema, doc.at("mean").get<double>()};
      case Family::kTree:
        return TreeModel{schema, tree_params_from_json(doc.at("params")), DecisionTree::from_json(doc.at("tree"))};
      case Family::kForest: {
        ForestModel m;
        m.schema = schema;
        m.params = ForestParams::from_json(doc.at("params"));
        for (const auto& t : doc.at("trees")) m.trees.push_back(DecisionTree::from_json(t));
        m.bootstrap_indices = doc.at("bootstrap_indices").get<std::vector<std::vector<std::size_t>>>();
        if (m.trees.size() != m.params.n_estimators) throw ConfigError("forest tree count disagrees with n_estimators");
        return m;
      }
      case Family::kBoostOblivious:
      case Family::kBoostLevel: {
        BoosterModel m;
        m.schema = schema;
        const TreeShape shape = family == Family::kBoostOblivious ? TreeShape::kOblivious : TreeShape::kLevelwise;
        m.params = BoosterParams::from_json(doc.at("params"), shape);
        m.base_score = doc.at("base_score").get<double>();
        m.train_rmse = doc.at("train_rmse").get<std::vector<double>>();
        for (const auto& t : doc.at("trees")) {
          if (shape == TreeShape::kOblivious) {
            m.trees.emplace_back(ObliviousTree::from_json(t));
          } else {
            m.trees.emplace_back(DecisionTree::from_json(t));
          }
        }
        return m;
      }
      case Family::kSvr: {
        SvrModel m;
        m.schema = schema;
        m.params = SvrParams::from_json(doc.at("params"));
        m.gamma = doc.at("gamma").get<double>();
        m.bias = doc.at("bias").get<double>();
        m.objective = doc.at("objective").get<double>();
        m.iterations = doc.at("iterations").get<std::size_t>();
        m.n_train = doc.at("n_train").get<std::size_t>();
        m.dual_coef = doc.at("dual_coef").get<std::vector<double>>();
        m.support_indices = doc.at("support_indices").get<std::vector<std::size_t>>();
        m.support_vectors = matrix_from_json(doc.at("support_vectors"));
        m.warnings = doc.value("warnings", std::vector<std::string>{});
        if (m.support_vectors.rows() != m.dual_coef.size()) throw ConfigError("SVR coefficient count mismatch");
        return m;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
  throw ConfigError("unhandled model family");
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(model).dump() << '\n';
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("model " + path.string() + ": " + e.what());
  }
}

namespace {

std::vector<const NumericColumn*> feature_columns(const DataTable& table, const std::string& target) {
  const NumericColumn* target_col = table.find(target);
  std::vector<const NumericColumn*> cols;
  for (const auto& col : table.numeric) {
    if (&col != target_col) cols.push_back(&col);
  }
  return cols;
}

}  // namespace

TrainingData training_data(const DataTable& table, const std::string& target) {
  const NumericColumn& y_col = table.at(target);
  const auto cols = feature_columns(table, target);
  TrainingData out;
  for (const auto* c : cols) out.frame.schema.names.push_back(c->name);
  std::vector<double> data;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    if (!y_col.cells[r]) {
      ++out.dropped_missing_target;
      continue;
    }
    for (const auto* c : cols) {
      if (!c->cells[r]) {
        throw DataError("missing value in feature '" + c->name + "' at " + table.station[r] + " " +
                        table.date[r].iso() + "; learners need dense input");
      }
      data.push_back(*c->cells[r]);
    }
    out.y.push_back(*y_col.cells[r]);
    out.source_rows.push_back(r);
  }
  out.frame.X = Matrix(out.y.size(), cols.size(), std::move(data));
  return out;
}

FeatureFrame feature_frame(const DataTable& table, const std::string& target) {
  const auto cols = feature_columns(table, target);
  FeatureFrame frame;
  for (const auto* c : cols) frame.schema.names.push_back(c->name);
  std::vector<double> data;
  data.reserve(table.rows() * cols.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (const auto* c : cols) {
      if (!c->cells[r]) {
        throw DataError("missing value in feature '" + c->name + "' at " + table.station[r] + " " + table.date[r].iso());
      }
      data.push_back(*c->cells[r]);
    }
  }
  frame.X = Matrix(table.rows(), cols.size(), std::move(data));
  return frame;
}

}  // namespace aqicast::models
