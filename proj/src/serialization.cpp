#include "linmdp/serialization.hpp"

#include <fstream>
#include <stdexcept>

namespace linmdp {

// Row-major nested arrays.
Json to_json(const Mat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidInstance("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw InvalidInstance("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

Json mdp_to_json(const LinearMDP& mdp) {
  Json j;
  j["format"] = "linmdp-instance";
  j["H"] = mdp.horizon();
  j["d"] = mdp.dim();
  j["A"] = mdp.num_actions();
  j["layer_sizes"] = mdp.layer_sizes();
  // phi[s*A + a] is a length-d row; psi[s] likewise.
  j["phi"] = to_json(mdp.features().transpose());
  j["psi"] = to_json(mdp.psi_matrix().transpose());
  if (!mdp.exact()) {
    j["zeta"] = mdp.misspecification();
    Json rows = Json::array();
    for (int h = 0; h + 1 < mdp.horizon(); ++h) rows.push_back(to_json(mdp.transitions(h)));
    j["transitions"] = std::move(rows);
    j["loss_offsets"] = to_json(mdp.loss_offsets());
  }
  return j;
}

LinearMDP mdp_from_json(const Json& j) {
  try {
    const int H = j.at("H").get<int>();
    const int d = j.at("d").get<int>();
    const int A = j.at("A").get<int>();
    auto sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (static_cast<int>(sizes.size()) != H) throw InvalidInstance("layer_sizes length differs from H");
    Mat phi = mat_from_json(j.at("phi")).transpose();
    Mat psi = mat_from_json(j.at("psi")).transpose();
    if (phi.rows() != d || psi.rows() != d) throw InvalidInstance("feature rows must have length d");
    LinearMDP mdp(std::move(sizes), A, std::move(phi), std::move(psi));
    if (j.contains("zeta") && j.at("zeta").get<double>() > 0.0) {
      std::vector<Mat> rows;
      for (const Json& t : j.at("transitions")) rows.push_back(mat_from_json(t));
      return mdp.with_true_dynamics(std::move(rows), mat_from_json(j.at("loss_offsets")), j.at("zeta").get<double>());
    }
    return mdp;
  } catch (const Json::exception& e) {
    throw InvalidInstance(std::string("malformed instance document: ") + e.what());
  }
}

Json schedule_to_json(const LossSchedule& schedule) {
  Json j;
  j["format"] = "linmdp-schedule";
  j["K"] = schedule.num_episodes;
  j["kind"] = to_string(schedule.kind);
  Json theta = Json::array();
  for (const LossVectors& th : schedule.theta) theta.push_back(to_json(th));
  j["theta"] = std::move(theta);
  return j;
}

LossSchedule schedule_from_json(const Json& j) {
  try {
    LossSchedule s;
    s.num_episodes = j.at("K").get<long>();
    s.kind = parse_schedule_kind(j.at("kind").get<std::string>());
    for (const Json& th : j.at("theta")) s.theta.push_back(mat_from_json(th));
    if (static_cast<long>(s.theta.size()) != s.num_episodes) throw InvalidInstance("theta count differs from K");
    return s;
  } catch (const Json::exception& e) {
    throw InvalidInstance(std::string("malformed schedule document: ") + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return Json::parse(in);
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace linmdp
