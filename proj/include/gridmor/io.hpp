#pragma once

// Serialization: reduced-model JSON, trajectory/sweep CSV, tensor dumps.
// All floating-point text goes through fmt_g17 so identical runs produce
// byte-identical files.

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridmor/errors.hpp"
#include "gridmor/sim.hpp"
#include "gridmor/strh2.hpp"
#include "gridmor/sweep.hpp"
#include "gridmor/tensor.hpp"

namespace gridmor {

inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot open output file: " + path);
  out << body;
  if (!out) throw validation_error("write failed: " + path);
}

}  // namespace detail

// Resolved run configuration, echoed into every output file.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

inline std::string config_comment_block(const ConfigEcho& cfg) {
  std::string s;
  for (const auto& [k, v] : cfg) s += "# " + k + "=" + v + "\n";
  return s;
}

inline nlohmann::json reduced_model_json(const ReducedSecondOrderModel& rom,
                                         const std::string& method, int r_q, double mu,
                                         bool converged, const ConfigEcho& cfg = {}) {
  nlohmann::json j;
  j["Mr"] = detail::matrix_to_json(rom.Mr);
  j["Dr"] = detail::matrix_to_json(rom.Dr);
  j["Br"] = detail::vector_to_json(rom.Br);
  j["Cr"] = detail::matrix_to_json(rom.Cr);
  j["Vfinal"] = detail::matrix_to_json(rom.V);
  if (!rom.galerkin) j["W"] = detail::matrix_to_json(rom.W);
  nlohmann::json meta;
  meta["method"] = method;
  meta["r_q"] = r_q;
  meta["r"] = rom.r();
  meta["mu"] = mu;
  if (method == "strh2-a")
    meta["variant"] = "A";
  else if (method == "strh2-b")
    meta["variant"] = "B";
  meta["converged"] = converged;
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : cfg) config[k] = v;
  meta["config"] = config;
  j["meta"] = meta;
  return j;
}

inline void write_reduced_model(const std::string& path, const nlohmann::json& j) {
  detail::write_text_file(path, j.dump(2) + "\n");
}

inline std::string trajectory_csv(const Trajectory& tr, const ConfigEcho& cfg = {}) {
  std::string s = config_comment_block(cfg);
  s += "t";
  for (Eigen::Index p = 0; p < tr.outputs.rows(); ++p) s += ",y" + std::to_string(p + 1);
  s += "\n";
  for (Eigen::Index k = 0; k < tr.times.size(); ++k) {
    s += fmt_g17(tr.times(k));
    for (Eigen::Index p = 0; p < tr.outputs.rows(); ++p) s += "," + fmt_g17(tr.outputs(p, k));
    s += "\n";
  }
  return s;
}

inline std::string sweep_csv(const std::vector<SweepRecord>& records, const ConfigEcho& cfg = {}) {
  std::string s = config_comment_block(cfg);
  s += "method,r,input,rel_linf,reduce_s,sim_s,converged\n";
  for (const auto& rec : records) {
    s += rec.method + "," + std::to_string(rec.r) + "," + rec.input + "," +
         fmt_g17(rec.rel_linf) + "," + fmt_g17(rec.reduce_s) + "," + fmt_g17(rec.sim_s) + "," +
         (rec.converged ? "1" : "0") + "\n";
  }
  return s;
}

// One "i j k value" line per stored entry, 1-based indices, sorted order.
inline std::string tensor_dump(const SparseTensor3& H, const ConfigEcho& cfg = {}) {
  std::string s = config_comment_block(cfg);
  for (const auto& e : H.entries())
    s += std::to_string(e.i + 1) + " " + std::to_string(e.j + 1) + " " + std::to_string(e.k + 1) +
         " " + fmt_g17(e.v) + "\n";
  return s;
}

}  // namespace gridmor
