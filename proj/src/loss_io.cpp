#include "structrates/loss.hpp"

#include "csv.hpp"
#include "structrates/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

namespace structrates {

FiniteLoss read_loss_csv(std::istream& in) {
  const auto rows = detail::read_csv_rows(in);
  require(rows.size() >= 3, "loss CSV needs a header row and at least two prediction rows");
  const auto& header = rows.front();
  require(header.size() >= 2, "loss CSV header needs a corner cell and at least one y label");
  std::vector<std::string> y_labels(header.begin() + 1, header.end());

  std::vector<std::string> z_labels;
  Eigen::MatrixXd matrix(static_cast<Eigen::Index>(rows.size() - 1),
                         static_cast<Eigen::Index>(y_labels.size()));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    require(row.size() == header.size(), "loss CSV row " + std::to_string(r + 1) + " has " +
                                             std::to_string(row.size()) + " cells, expected " +
                                             std::to_string(header.size()));
    z_labels.push_back(row.front());
    for (std::size_t c = 1; c < row.size(); ++c) {
      matrix(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(c - 1)) =
          detail::parse_double(row[c], "row " + std::to_string(r + 1) + ", column " + std::to_string(c + 1));
    }
  }
  return FiniteLoss(std::move(z_labels), std::move(y_labels), std::move(matrix));
}

FiniteLoss loss_from_json(const nlohmann::json& j) {
  require(j.is_object(), "loss JSON must be an object");
  for (const auto& [key, value] : j.items()) {
    require(key == "z" || key == "y" || key == "matrix", "unknown key '" + key + "' in loss JSON");
  }
  require(j.contains("z") && j.contains("y") && j.contains("matrix"),
          "loss JSON needs \"z\", \"y\" and \"matrix\"");
  auto z_labels = j.at("z").get<std::vector<std::string>>();
  auto y_labels = j.at("y").get<std::vector<std::string>>();
  const auto rows = j.at("matrix").get<std::vector<std::vector<double>>>();
  require(rows.size() == z_labels.size(), "loss JSON matrix needs one row per z label");
  Eigen::MatrixXd matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(y_labels.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r].size() == y_labels.size(), "loss JSON matrix row " + std::to_string(r) + " has wrong length");
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return FiniteLoss(std::move(z_labels), std::move(y_labels), std::move(matrix));
}

nlohmann::json loss_to_json(const FiniteLoss& loss) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < loss.matrix().rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < loss.matrix().cols(); ++c) row.push_back(loss.matrix()(r, c));
    rows.push_back(std::move(row));
  }
  return {{"z", loss.z_labels()}, {"y", loss.y_labels()}, {"matrix", std::move(rows)}};
}

FiniteLoss load_loss(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open loss file " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".csv") return read_loss_csv(in);
  if (ext == ".json") return loss_from_json(nlohmann::json::parse(in));
  throw ContractViolation("loss file must end in .csv or .json: " + path.string());
}

}  // namespace structrates
