#include "gridcast/error.hpp"
#include "gridcast/models.hpp"

#include <fstream>
#include <sstream>

namespace gridcast {

using nlohmann::json;

namespace {

std::span<const double> row_span(const Matrix& x, Eigen::Index r) {
  return {x.data() + r * x.cols(), static_cast<std::size_t>(x.cols())};
}

template <typename Predictor>
std::vector<std::optional<double>> predict_rows(const Predictor& p, const Matrix& x) {
  std::vector<std::optional<double>> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[static_cast<std::size_t>(r)] = p.predict(row_span(x, r));
  return out;
}

json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("model artifact: matrix size mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

json tree_to_json(const RegressionTree& tree) {
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes) {
    nodes.push_back({n.feature, n.bin, n.threshold, n.left, n.right, n.value});
  }
  return nodes;
}

RegressionTree tree_from_json(const json& j) {
  RegressionTree tree;
  for (const json& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.bin = n.at(1).get<std::uint32_t>();
    node.threshold = n.at(2).get<double>();
    node.left = n.at(3).get<int>();
    node.right = n.at(4).get<int>();
    node.value = n.at(5).get<double>();
    tree.nodes.push_back(node);
  }
  const auto count = static_cast<int>(tree.nodes.size());
  for (const TreeNode& n : tree.nodes) {
    if (n.feature >= 0 && (n.left < 0 || n.left >= count || n.right < 0 || n.right >= count)) {
      throw DataError("model artifact: dangling tree node");
    }
  }
  return tree;
}

json state_to_json(const TreeEnsemble& e) {
  json trees = json::array();
  for (const auto& t : e.trees) trees.push_back(tree_to_json(t));
  return {{"base", e.base}, {"learning_rate", e.learning_rate}, {"trees", trees}};
}

json state_to_json(const CatBoostModel& m) {
  json ensembles = json::array();
  for (const ObliviousEnsemble& e : m.ensembles) {
    json trees = json::array();
    for (const ObliviousTree& t : e.trees) {
      trees.push_back({{"features", t.features},
                       {"bins", t.bins},
                       {"thresholds", t.thresholds},
                       {"leaf_values", t.leaf_values}});
    }
    ensembles.push_back({{"base", e.base}, {"learning_rate", e.learning_rate}, {"trees", trees}});
  }
  return {{"ensembles", ensembles}};
}

json state_to_json(const SvrSolution& s) {
  return {{"kernel", kernel_name(s.kernel)},
          {"gamma", s.gamma},
          {"C", s.C},
          {"epsilon", s.epsilon},
          {"alpha", s.alpha},
          {"alpha_star", s.alpha_star},
          {"support_indices", s.support_indices},
          {"coef", s.coef},
          {"support_vectors", matrix_to_json(s.support_vectors)},
          {"bias", s.bias},
          {"converged", s.converged},
          {"iterations", s.iterations},
          {"max_violation", s.max_violation},
          {"dual_objective", s.dual_objective}};
}

json state_to_json(const SequenceModel& m) {
  const Eigen::VectorXd& p = m.network.parameters();
  return {{"input", m.network.input_size()},
          {"hidden", m.network.hidden()},
          {"attention", m.network.attention()},
          {"window", m.window},
          {"epoch_loss", m.epoch_loss},
          {"parameters", std::vector<double>(p.data(), p.data() + p.size())}};
}

ModelState state_from_json(ModelKind kind, const json& j) {
  switch (kind) {
    case ModelKind::gbrt:
    case ModelKind::lightgbm: {
      TreeEnsemble e;
      e.base = j.at("base").get<double>();
      e.learning_rate = j.at("learning_rate").get<double>();
      for (const json& t : j.at("trees")) e.trees.push_back(tree_from_json(t));
      return e;
    }
    case ModelKind::catboost: {
      CatBoostModel m;
      for (const json& je : j.at("ensembles")) {
        ObliviousEnsemble e;
        e.base = je.at("base").get<double>();
        e.learning_rate = je.at("learning_rate").get<double>();
        for (const json& jt : je.at("trees")) {
          ObliviousTree t;
          t.features = jt.at("features").get<std::vector<int>>();
          t.bins = jt.at("bins").get<std::vector<std::uint32_t>>();
          t.thresholds = jt.at("thresholds").get<std::vector<double>>();
          t.leaf_values = jt.at("leaf_values").get<std::vector<double>>();
          if (t.leaf_values.size() != (std::size_t{1} << t.features.size()) ||
              t.thresholds.size() != t.features.size()) {
            throw DataError("model artifact: malformed oblivious tree");
          }
          e.trees.push_back(std::move(t));
        }
        m.ensembles.push_back(std::move(e));
      }
      return m;
    }
    case ModelKind::svr: {
      SvrSolution s;
      s.kernel = parse_kernel(j.at("kernel").get<std::string>());
      s.gamma = j.at("gamma").get<double>();
      s.C = j.at("C").get<double>();
      s.epsilon = j.at("epsilon").get<double>();
      s.alpha = j.at("alpha").get<std::vector<double>>();
      s.alpha_star = j.at("alpha_star").get<std::vector<double>>();
      s.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
      s.coef = j.at("coef").get<std::vector<double>>();
      s.support_vectors = matrix_from_json(j.at("support_vectors"));
      s.bias = j.at("bias").get<double>();
      s.converged = j.at("converged").get<bool>();
      s.iterations = j.at("iterations").get<long>();
      s.max_violation = j.at("max_violation").get<double>();
      s.dual_objective = j.at("dual_objective").get<double>();
      if (static_cast<Eigen::Index>(s.coef.size()) != s.support_vectors.rows()) {
        throw DataError("model artifact: support vector count mismatch");
      }
      return s;
    }
    case ModelKind::lstm:
    case ModelKind::awmlstm: {
      SequenceModel m;
      m.network = LstmNetwork(j.at("input").get<int>(), j.at("hidden").get<int>(), j.at("attention").get<int>());
      m.window = j.at("window").get<std::size_t>();
      m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
      const auto p = j.at("parameters").get<std::vector<double>>();
      Eigen::VectorXd& theta = m.network.parameters();
      if (static_cast<Eigen::Index>(p.size()) != theta.size()) {
        throw DataError("model artifact: parameter count mismatch");
      }
      std::copy(p.begin(), p.end(), theta.data());
      return m;
    }
  }
  throw DataError("model artifact: unknown kind");
}

}  // namespace

std::vector<std::optional<double>> RegressorModel::predict(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_names.size()) {
    throw DataError("predict: expected " + std::to_string(feature_names.size()) + " columns, got " +
                    std::to_string(x.cols()));
  }
  return std::visit(
      [&](const auto& s) -> std::vector<std::optional<double>> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, SequenceModel>) {
          return s.predict(x);
        } else {
          return predict_rows(s, x);
        }
      },
      state);
}

std::vector<std::optional<double>> RegressorModel::predict(const FeatureTable& rows) const {
  std::vector<std::size_t> index;
  std::string missing;
  for (const std::string& name : feature_names) {
    if (auto c = rows.column_index(name)) {
      index.push_back(*c);
    } else {
      missing += (missing.empty() ? "" : ", ") + name;
    }
  }
  if (!missing.empty()) throw DataError("predict: missing columns: " + missing);
  Matrix x(rows.features.rows(), static_cast<Eigen::Index>(index.size()));
  for (std::size_t c = 0; c < index.size(); ++c) {
    x.col(static_cast<Eigen::Index>(c)) = rows.features.col(static_cast<Eigen::Index>(index[c]));
  }
  return predict(x);
}

RegressorModel fit_model(ModelKind kind, const ModelConfigs& configs, const FeatureTable& train, Target target,
                         std::uint64_t seed) {
  if (train.rows() == 0) throw DataError(std::string(model_name(kind)) + ": empty training table");
  RegressorModel model;
  model.kind = kind;
  model.seed = seed;
  model.config = config_to_json(configs, kind);
  model.feature_names = train.column_names;
  const Matrix& x = train.features;
  const std::vector<double>& y = train.target(target);
  switch (kind) {
    case ModelKind::gbrt: model.state = fit_gbrt(x, y, configs.gbrt).ensemble; break;
    case ModelKind::lightgbm: model.state = fit_lightgbm(x, y, configs.lightgbm, seed).ensemble; break;
    case ModelKind::catboost: model.state = fit_catboost(x, y, configs.catboost, seed); break;
    case ModelKind::svr: {
      SvrSolution s = fit_svr(x, y, configs.svr);
      model.converged = s.converged;
      model.state = std::move(s);
      break;
    }
    case ModelKind::lstm: model.state = fit_sequence_model(x, y, configs.lstm, false, seed); break;
    case ModelKind::awmlstm: model.state = fit_sequence_model(x, y, configs.awmlstm, true, seed); break;
  }
  return model;
}

std::string serialize_model(const RegressorModel& model) {
  json body = {{"kind", model_name(model.kind)},
               {"seed", model.seed},
               {"config", model.config},
               {"feature_names", model.feature_names},
               {"converged", model.converged},
               {"state", std::visit([](const auto& s) { return state_to_json(s); }, model.state)}};
  std::string out(kModelMagic);
  out += ' ' + std::to_string(kModelFormatVersion) + '\n';
  out += body.dump();
  out += '\n';
  return out;
}

RegressorModel deserialize_model(std::string_view text) {
  const auto eol = text.find('\n');
  const std::string expected = std::string(kModelMagic) + ' ' + std::to_string(kModelFormatVersion);
  if (eol == std::string_view::npos || text.substr(0, eol) != expected) {
    throw DataError("model artifact: bad header (expected '" + expected + "')");
  }
  try {
    const json body = json::parse(text.substr(eol + 1));
    RegressorModel model;
    model.kind = parse_model(body.at("kind").get<std::string>());
    model.seed = body.at("seed").get<std::uint64_t>();
    model.config = body.at("config");
    model.feature_names = body.at("feature_names").get<std::vector<std::string>>();
    model.converged = body.at("converged").get<bool>();
    model.state = state_from_json(model.kind, body.at("state"));
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("model artifact: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model artifact: ") + e.what());
  }
}

void save_model(const RegressorModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize_model(model);
  if (!out) throw DataError("write failed: " + path.string());
}

RegressorModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize_model(buf.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace gridcast
