#include "policytest/instance_io.hpp"

#include <fstream>

namespace policytest {

namespace {

using nlohmann::json;

Mat read_matrix(const json& doc, const char* key, int rows, int cols) {
  const json& m = doc.at(key);
  if (!m.is_array() || static_cast<int>(m.size()) != rows)
    throw DimensionError(std::string(key) + ": expected " + std::to_string(rows) + " rows");
  Mat out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!m[i].is_array() || static_cast<int>(m[i].size()) != cols)
      throw DimensionError(std::string(key) + ": expected " + std::to_string(cols) + " columns");
    for (int j = 0; j < cols; ++j) out(i, j) = m[i][j].get<double>();
  }
  return out;
}

}  // namespace

MdpInstance instance_from_json(const json& doc) {
  try {
    const int ns = doc.at("n_states").get<int>();
    const int na = doc.at("n_actions").get<int>();
    if (ns <= 0 || na <= 0) throw InvalidInput("n_states and n_actions must be positive");
    const double gamma = doc.at("gamma").get<double>();

    const auto rho_list = doc.at("rho").get<std::vector<double>>();
    if (static_cast<int>(rho_list.size()) != ns) throw DimensionError("rho: expected n_states entries");
    Vec rho = Eigen::Map<const Vec>(rho_list.data(), ns);

    auto rows = doc.at("kernel").get<std::vector<std::vector<std::vector<double>>>>();
    if (static_cast<int>(rows.size()) != ns) throw DimensionError("kernel: expected n_states blocks");
    for (const auto& block : rows)
      if (static_cast<int>(block.size()) != na) throw DimensionError("kernel: expected n_actions rows per state");

    const double threshold = doc.value("threshold", 0.0);
    return make_instance(TransitionKernel::from_nested(rows), read_matrix(doc, "reward", ns, na), std::move(rho),
                         gamma, read_matrix(doc, "policy", ns, na), threshold);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("instance file: ") + e.what());
  }
}

MdpInstance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open instance file " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidInput("cannot parse " + path + ": " + e.what());
  }
  return instance_from_json(doc);
}

json instance_to_json(const MdpInstance& m) {
  json doc;
  doc["n_states"] = m.n_states;
  doc["n_actions"] = m.n_actions;
  doc["gamma"] = m.gamma;
  doc["rho"] = std::vector<double>(m.rho.data(), m.rho.data() + m.rho.size());
  json reward = json::array(), policy = json::array(), kernel = json::array();
  for (int s = 0; s < m.n_states; ++s) {
    json rr = json::array(), pr = json::array(), kb = json::array();
    for (int a = 0; a < m.n_actions; ++a) {
      rr.push_back(m.reward(s, a));
      pr.push_back(m.policy(s, a));
      auto row = m.kernel.row(s, a);
      kb.push_back(std::vector<double>(row.begin(), row.end()));
    }
    reward.push_back(rr);
    policy.push_back(pr);
    kernel.push_back(kb);
  }
  doc["reward"] = reward;
  doc["policy"] = policy;
  doc["kernel"] = kernel;
  doc["threshold"] = 0.0;
  return doc;
}

}  // namespace policytest
