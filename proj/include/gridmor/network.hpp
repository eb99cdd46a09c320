#pragma once

// Network parameter ingestion: JSON interchange format, validation, and
// synthetic fixture generation.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "gridmor/errors.hpp"

namespace gridmor {

struct NodeParams {
  double J;  // inertia, >= 0
  double D;  // damping, > 0
  double B;  // net injection
};

// One unordered coupling pair, stored once with i < j (0-based).
struct Coupling {
  int i;
  int j;
  double K;      // >= 0
  double gamma;  // rad
};

struct PowerNetwork {
  int n = 0;
  double omega_R = 0.0;
  std::vector<NodeParams> nodes;
  std::vector<Coupling> couplings;
  // Empty means "mean of all phase angles" (p = 1).
  std::optional<Eigen::MatrixXd> output_C;

  void validate() const {
    if (n < 1 || static_cast<int>(nodes.size()) != n)
      throw validation_error("node count mismatch");
    if (!(omega_R > 0.0)) throw validation_error("omega_R must be positive");
    for (int k = 0; k < n; ++k) {
      if (nodes[k].J < 0.0) throw validation_error("negative inertia J at node " + std::to_string(k + 1));
      if (!(nodes[k].D > 0.0)) throw validation_error("nonpositive damping D at node " + std::to_string(k + 1));
    }
    for (const auto& c : couplings) {
      if (c.i == c.j) throw validation_error("self-coupling at node " + std::to_string(c.i + 1));
      if (c.i < 0 || c.i >= n || c.j < 0 || c.j >= n)
        throw validation_error("coupling index out of range");
      if (c.K < 0.0) throw validation_error("negative coupling strength K");
    }
    if (output_C && output_C->cols() != n)
      throw validation_error("output matrix C column count must equal n");
    if (output_C && output_C->rows() < 1)
      throw validation_error("output matrix C must have at least one row");
  }
};

namespace detail {

// Merge raw 1-based coupling entries: (i,j) and (j,i) must agree exactly,
// each unordered pair kept once. Duplicated same-direction entries are errors.
inline std::vector<Coupling> merge_couplings(const std::vector<Coupling>& raw, int n) {
  std::vector<Coupling> merged;
  std::vector<int8_t> seen(static_cast<size_t>(n) * n, 0);
  std::vector<double> seenK(static_cast<size_t>(n) * n, 0.0);
  std::vector<double> seenG(static_cast<size_t>(n) * n, 0.0);
  for (const auto& c : raw) {
    if (c.i == c.j) throw validation_error("self-coupling at node " + std::to_string(c.i + 1));
    if (c.i < 0 || c.i >= n || c.j < 0 || c.j >= n)
      throw validation_error("coupling index out of range");
    const size_t fwd = static_cast<size_t>(c.i) * n + c.j;
    const size_t rev = static_cast<size_t>(c.j) * n + c.i;
    if (seen[fwd]) throw validation_error("duplicate coupling entry");
    seen[fwd] = 1;
    seenK[fwd] = c.K;
    seenG[fwd] = c.gamma;
    if (seen[rev]) {
      if (seenK[rev] != c.K || seenG[rev] != c.gamma)
        throw validation_error("asymmetric coupling between nodes " + std::to_string(c.i + 1) +
                               " and " + std::to_string(c.j + 1));
      continue;  // pair already stored by the first direction
    }
    Coupling m = c;
    if (m.i > m.j) std::swap(m.i, m.j);
    merged.push_back(m);
  }
  return merged;
}

}  // namespace detail

inline PowerNetwork network_from_json(const nlohmann::json& js) {
  PowerNetwork net;
  for (const char* field : {"n", "omega_R", "nodes", "couplings"})
    if (!js.contains(field)) throw validation_error(std::string("missing field ") + field);
  net.n = js.at("n").get<int>();
  net.omega_R = js.at("omega_R").get<double>();
  for (const auto& nd : js.at("nodes")) {
    for (const char* field : {"J", "D", "B"})
      if (!nd.contains(field)) throw validation_error(std::string("missing node field ") + field);
    net.nodes.push_back({nd.at("J").get<double>(), nd.at("D").get<double>(), nd.at("B").get<double>()});
  }
  std::vector<Coupling> raw;
  for (const auto& cp : js.at("couplings")) {
    for (const char* field : {"i", "j", "K", "gamma"})
      if (!cp.contains(field)) throw validation_error(std::string("missing coupling field ") + field);
    raw.push_back({cp.at("i").get<int>() - 1, cp.at("j").get<int>() - 1,
                   cp.at("K").get<double>(), cp.at("gamma").get<double>()});
  }
  net.couplings = detail::merge_couplings(raw, net.n);
  if (js.contains("output") && !js.at("output").is_null()) {
    const auto& out = js.at("output");
    if (out.is_string()) {
      if (out.get<std::string>() != "mean")
        throw validation_error("unknown output spec: " + out.get<std::string>());
    } else if (out.is_object() && out.contains("C")) {
      const auto& rows = out.at("C");
      Eigen::MatrixXd C(rows.size(), net.n);
      for (size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<int>(rows[r].size()) != net.n)
          throw validation_error("output matrix C row length mismatch");
        for (int c = 0; c < net.n; ++c) C(static_cast<int>(r), c) = rows[r][c].get<double>();
      }
      net.output_C = C;
    } else {
      throw validation_error("output must be \"mean\" or {\"C\": [[...]]}");
    }
  }
  net.validate();
  return net;
}

inline PowerNetwork parse_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open network file: " + path);
  nlohmann::json js;
  try {
    in >> js;
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("JSON parse failure in " + path + ": " + e.what());
  }
  try {
    return network_from_json(js);
  } catch (const nlohmann::json::exception& e) {
    throw validation_error("malformed network file " + path + ": " + e.what());
  }
}

inline nlohmann::json network_to_json(const PowerNetwork& net) {
  nlohmann::json js;
  js["n"] = net.n;
  js["omega_R"] = net.omega_R;
  js["nodes"] = nlohmann::json::array();
  for (const auto& nd : net.nodes) js["nodes"].push_back({{"J", nd.J}, {"D", nd.D}, {"B", nd.B}});
  js["couplings"] = nlohmann::json::array();
  for (const auto& c : net.couplings)
    js["couplings"].push_back({{"i", c.i + 1}, {"j", c.j + 1}, {"K", c.K}, {"gamma", c.gamma}});
  if (net.output_C) {
    nlohmann::json rows = nlohmann::json::array();
    for (int r = 0; r < net.output_C->rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < net.output_C->cols(); ++c) row.push_back((*net.output_C)(r, c));
      rows.push_back(row);
    }
    js["output"] = {{"C", rows}};
  } else {
    js["output"] = "mean";
  }
  return js;
}

enum class Topology { Ring, Complete, Random };

namespace detail {

// Portable deterministic uniform draw in [lo, hi); std::uniform_real_distribution
// is implementation-defined, so map raw 32-bit words directly.
class FixtureRng {
public:
  explicit FixtureRng(unsigned seed) : state_(seed ? seed : 0x9e3779b9u) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (next() * (1.0 / 4294967296.0));
  }

private:
  uint32_t next() {
    // xorshift32
    uint32_t x = state_;
    x ^= x << 13;
    x ^= x >> 17;
    x ^= x << 5;
    state_ = x;
    return x;
  }
  uint32_t state_;
};

}  // namespace detail

// Deterministic-for-seed synthetic fixture network. Injections are balanced so
// they sum to zero; couplings are lossless (gamma = 0) so the balanced
// injections admit an equilibrium reachable by damped Newton.
inline PowerNetwork synth_network(int n, Topology topology, unsigned seed, double p_edge = 0.5) {
  if (n < 2) throw validation_error("synth_network requires n >= 2");
  detail::FixtureRng rng(seed);
  PowerNetwork net;
  net.n = n;
  net.omega_R = 2.0;
  double bsum = 0.0;
  for (int i = 0; i < n; ++i) {
    NodeParams nd;
    nd.J = rng.uniform(0.5, 2.0);
    nd.D = rng.uniform(0.5, 2.0);
    nd.B = rng.uniform(-0.25, 0.25);
    bsum += nd.B;
    net.nodes.push_back(nd);
  }
  for (auto& nd : net.nodes) nd.B -= bsum / n;
  auto add_edge = [&](int i, int j) {
    net.couplings.push_back({i, j, rng.uniform(0.5, 2.0), 0.0});
  };
  switch (topology) {
    case Topology::Ring:
      for (int i = 0; i + 1 < n; ++i) add_edge(i, i + 1);
      if (n > 2) add_edge(0, n - 1);
      break;
    case Topology::Complete:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) add_edge(i, j);
      break;
    case Topology::Random:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double draw = rng.uniform(0.0, 1.0);
          if (draw < p_edge) add_edge(i, j);
        }
      // keep the graph connected with a fallback path
      {
        std::vector<int8_t> linked(static_cast<size_t>(n), 0);
        for (const auto& c : net.couplings) linked[c.i] = linked[c.j] = 1;
        for (int i = 0; i + 1 < n; ++i)
          if (!linked[i] || !linked[i + 1]) add_edge(i, i + 1);
      }
      break;
  }
  net.validate();
  return net;
}

inline Topology topology_from_string(const std::string& s) {
  if (s == "ring") return Topology::Ring;
  if (s == "complete") return Topology::Complete;
  if (s == "random") return Topology::Random;
  throw validation_error("unknown topology: " + s);
}

}  // namespace gridmor
