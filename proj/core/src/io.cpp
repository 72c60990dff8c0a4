#include "quarks/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "quarks/errors.hpp"

namespace quarks {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

void print_value(std::ofstream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty())
    throw IoError("model file: expected a matrix as array of rows");
  Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(r);
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw IoError("model file: ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
  }
  return m;
}

json model_header(const char* kind) {
  json j;
  j["format"] = "quarks-model";
  j["version"] = 1;
  j["kind"] = kind;
  return j;
}

json check_header(const std::string& path) {
  auto in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("model file '" + path + "': " + e.what());
  }
  if (j.value("format", "") != "quarks-model" || j.value("version", 0) != 1)
    throw IoError("model file '" + path + "': unknown format or version");
  return j;
}

}  // namespace

void write_batch_csv(const std::string& path, const SensorBatch& batch) {
  auto out = open_out(path);
  out << "# quarks-batch v1 N=" << batch.frame_rows()
      << " channels=" << batch.channels() << " Nt=" << batch.size() << "\n";
  for (Eigen::Index k = 0; k < batch.size(); ++k) {
    Eigen::VectorXd v = batch.lifted(k);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (i) out << ",";
      print_value(out, v(i));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

SensorBatch read_batch_csv(const std::string& path) {
  auto in = open_in(path);
  std::string header;
  std::getline(in, header);
  Eigen::Index n = 0, channels = 0, nt = 0;
  if (std::sscanf(header.c_str(),
                  "# quarks-batch v1 N=%" SCNd64 " channels=%" SCNd64
                  " Nt=%" SCNd64,
                  &n, &channels, &nt) != 3)
    throw IoError("batch file '" + path + "': bad header line");
  if (n < 2 || channels < 4 || channels % n != 0 || nt < 1)
    throw IoError("batch file '" + path + "': inconsistent header");

  Eigen::MatrixXd lifted(channels, nt);
  std::string line;
  Eigen::Index k = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (k >= nt) throw IoError("batch file '" + path + "': more rows than Nt");
    std::stringstream ss(line);
    std::string cell;
    Eigen::Index i = 0;
    while (std::getline(ss, cell, ',')) {
      if (i >= channels)
        throw IoError("batch file '" + path + "': row has too many channels");
      lifted(i++, k) = std::stod(cell);
    }
    if (i != channels)
      throw IoError("batch file '" + path + "': row has too few channels");
    ++k;
  }
  if (k != nt) throw IoError("batch file '" + path + "': fewer rows than Nt");
  return SensorBatch::from_lifted(lifted, n);
}

void write_model_json(const std::string& path, const QuarksModel& model) {
  json j = model_header("quarks");
  j["frame_rows"] = model.frame_rows;
  j["frame_cols"] = model.frame_cols;
  j["order"] = model.order;
  j["rank"] = model.rank;
  json left = json::array(), right = json::array();
  for (int l = 0; l < model.order; ++l) {
    json lt = json::array(), rt = json::array();
    for (int t = 0; t < model.rank; ++t) {
      lt.push_back(matrix_to_json(model.left[l][t]));
      rt.push_back(matrix_to_json(model.right[l][t]));
    }
    left.push_back(std::move(lt));
    right.push_back(std::move(rt));
  }
  j["left"] = std::move(left);
  j["right"] = std::move(right);
  open_out(path) << j.dump(1) << "\n";
}

void write_model_json(const std::string& path, const DenseVarModel& model) {
  json j = model_header("dense");
  j["channels"] = model.channels;
  j["order"] = model.order;
  json coeffs = json::array();
  for (const auto& a : model.coefficients) coeffs.push_back(matrix_to_json(a));
  j["coefficients"] = std::move(coeffs);
  open_out(path) << j.dump(1) << "\n";
}

AnyModel read_model_json(const std::string& path) {
  json j = check_header(path);
  std::string kind = j.value("kind", "");
  try {
    if (kind == "quarks") {
      QuarksModel m;
      m.frame_rows = j.at("frame_rows").get<Eigen::Index>();
      m.frame_cols = j.at("frame_cols").get<Eigen::Index>();
      m.order = j.at("order").get<int>();
      m.rank = j.at("rank").get<int>();
      for (int l = 0; l < m.order; ++l) {
        std::vector<Eigen::MatrixXd> lt, rt;
        for (int t = 0; t < m.rank; ++t) {
          lt.push_back(matrix_from_json(j.at("left").at(l).at(t)));
          rt.push_back(matrix_from_json(j.at("right").at(l).at(t)));
        }
        m.left.push_back(std::move(lt));
        m.right.push_back(std::move(rt));
      }
      m.validate();
      return m;
    }
    if (kind == "dense") {
      DenseVarModel m;
      m.channels = j.at("channels").get<Eigen::Index>();
      m.order = j.at("order").get<int>();
      for (int l = 0; l < m.order; ++l)
        m.coefficients.push_back(matrix_from_json(j.at("coefficients").at(l)));
      return m;
    }
  } catch (const json::exception& e) {
    throw IoError("model file '" + path + "': " + e.what());
  }
  throw IoError("model file '" + path + "': unknown kind '" + kind + "'");
}

MissingMask read_mask_csv(const std::string& path, Eigen::Index channels) {
  auto in = open_in(path);
  std::vector<Eigen::Index> idx;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell.find_first_not_of(" \t\r") == std::string::npos) continue;
      idx.push_back(static_cast<Eigen::Index>(std::stoll(cell)));
    }
  }
  return MissingMask(channels, std::move(idx));
}

void write_mask_csv(const std::string& path, const MissingMask& mask) {
  auto out = open_out(path);
  for (Eigen::Index idx : mask.missing()) out << idx << "\n";
}

void write_coefficient_csv(const std::string& path, const QuarksModel& model,
                           int lag) {
  if (model.frame_rows * model.frame_cols > 4096)
    throw ConfigError("write_coefficient_csv: model too large for a dense "
                      "debug export");
  Eigen::MatrixXd a = model.coefficient_dense(lag);
  auto out = open_out(path);
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (c) out << ",";
      print_value(out, a(r, c));
    }
    out << "\n";
  }
}

std::string report_json(const AlsReport& report) {
  json j;
  j["schema"] = "quarks-report";
  j["version"] = 1;
  j["iterations"] = report.iterations;
  j["termination"] = report.termination == Termination::converged
                         ? "converged"
                         : "max_iterations";
  j["wall_seconds"] = report.wall_seconds;
  j["cost_trace"] = report.cost_trace;
  j["cost_monotone"] = report.cost_monotone;
  j["min_singular_value"] = report.min_singular_value;
  j["initializer_redraws"] = report.initializer_redraws;
  j["rank_deficient_fallback"] = report.rank_deficient_fallback;
  return j.dump(1);
}

void write_bench_csv(const std::string& path,
                     const std::vector<BenchRecord>& records) {
  auto out = open_out(path);
  out << "method,N,Nt,p,r,seconds,vaf_percent,nonzeros,threads\n";
  for (const auto& r : records) {
    out << r.method << "," << r.n << "," << r.samples << "," << r.order << ","
        << r.rank << ",";
    print_value(out, r.seconds);
    out << ",";
    print_value(out, r.vaf_percent);
    out << "," << r.nonzeros << "," << r.threads << "\n";
  }
}

}  // namespace quarks
