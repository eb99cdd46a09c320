#pragma once

// Order-sweep experiment driver: build each reduced model once, simulate under
// nominal and perturbed inputs, record relative L-infinity errors and wall
// times.

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridmor/baselines.hpp"
#include "gridmor/errors.hpp"
#include "gridmor/log.hpp"
#include "gridmor/sim.hpp"
#include "gridmor/strh2.hpp"

namespace gridmor {

inline Trajectory integrate_reduced(const ReducedSecondOrderModel& rom, const SecondOrderModel& m,
                                    const InputSignal& u, double T, double dt,
                                    const Eigen::VectorXd& delta_r0,
                                    const Eigen::VectorXd& ddelta_r0) {
  const int r = rom.r();
  if (delta_r0.size() != r || ddelta_r0.size() != r)
    throw validation_error("integrate_reduced: initial condition length mismatch");
  Eigen::PartialPivLU<Eigen::MatrixXd> mlu(rom.Mr);
  if (mlu.rcond() < 1e-14) throw numerical_error("integrate_reduced: singular reduced mass matrix");
  Eigen::VectorXd x0(2 * r);
  x0.head(r) = delta_r0;
  x0.tail(r) = ddelta_r0;
  auto deriv = [&](double t, const Eigen::VectorXd& x) {
    Eigen::VectorXd dx(2 * r);
    dx.head(r) = x.tail(r);
    dx.tail(r) = mlu.solve(rom.Br * u(t) - rom.Dr * x.tail(r) - eval_f_r(rom, m, x.head(r)));
    return dx;
  };
  auto out = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return rom.Cr * x.head(r); };
  return detail::rk4(x0, T, dt, deriv, out, /*keep_states=*/false);
}

enum class Method { StrH2A, StrH2B, Pod, StrQbt };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::StrH2A: return "strh2-a";
    case Method::StrH2B: return "strh2-b";
    case Method::Pod: return "pod";
    case Method::StrQbt: return "strqbt";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "strh2-a") return Method::StrH2A;
  if (s == "strh2-b") return Method::StrH2B;
  if (s == "pod") return Method::Pod;
  if (s == "strqbt") return Method::StrQbt;
  throw validation_error("unknown method: " + s);
}

struct SweepRecord {
  std::string method;
  int r = 0;
  std::string input;  // "nominal" or "perturbed"
  double rel_linf = std::numeric_limits<double>::quiet_NaN();
  double reduce_s = 0.0;
  double sim_s = 0.0;
  bool converged = true;
  std::string note;  // failure reason when rel_linf is NaN
};

struct SweepConfig {
  std::vector<Method> methods;
  int r_min = 2;
  int r_max = 25;
  double mu = 1e-3;
  double T = 10.0;
  double dt = 1e-3;
  double perturb = 0.0;  // 0 disables the perturbed-input column
  double pod_train_T = 10.0;
  double pod_train_dt = 1e-2;
};

inline std::vector<SweepRecord> sweep_orders(const SecondOrderModel& m, const SweepConfig& cfg) {
  if (cfg.r_min < 1 || cfg.r_max < cfg.r_min) throw validation_error("sweep_orders: bad r range");
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
  };

  std::vector<double> input_levels{1.0};
  std::vector<std::string> input_names{"nominal"};
  if (cfg.perturb != 0.0) {
    input_levels.push_back(1.0 + cfg.perturb);
    input_names.push_back("perturbed");
  }

  // reference trajectories of the full model, one per input
  std::vector<Trajectory> refs;
  for (double lvl : input_levels)
    refs.push_back(integrate_second_order(m, constant_input(lvl), cfg.T, cfg.dt,
                                          Eigen::VectorXd::Zero(m.n), Eigen::VectorXd::Zero(m.n)));

  const bool want_strh2 = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method me) {
    return me == Method::StrH2A || me == Method::StrH2B;
  });
  const bool want_qbt =
      std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method me) { return me == Method::StrQbt; });

  // shared lifted model for the quadratic-based methods
  std::optional<QuadraticModel> qm;
  if (want_strh2 || want_qbt) {
    const QuadraticSystem sys = assemble_quadratic(m);
    const Eigen::VectorXd q0 = lift_state(Eigen::VectorXd::Zero(m.n), Eigen::VectorXd::Zero(m.n));
    qm = shift_and_stabilize(sys, q0, cfg.mu);
  }

  // POD trained on the nominal input only
  std::optional<SnapshotMatrix> snapshots;
  if (std::any_of(cfg.methods.begin(), cfg.methods.end(), [](Method me) { return me == Method::Pod; }))
    snapshots = collect_snapshots(m, constant_input(1.0), cfg.pod_train_T, cfg.pod_train_dt);

  std::vector<SweepRecord> records;
  for (Method method : cfg.methods) {
    for (int r = cfg.r_min; r <= cfg.r_max; ++r) {
      ReducedSecondOrderModel rom;
      double reduce_s = 0.0;
      bool converged = true;
      std::string fail;
      try {
        const auto t0 = clock::now();
        switch (method) {
          case Method::StrH2A:
          case Method::StrH2B: {
            const int r_q = std::max(1, r - m.p());
            StrH2Result res = strh2_reduce(
                m, *qm, r_q, method == Method::StrH2A ? StrH2Variant::A : StrH2Variant::B);
            rom = res.rom;
            converged = res.diag.qirka_converged;
            break;
          }
          case Method::Pod:
            rom = reduce_with_pod(m, pod_basis(*snapshots, r));
            break;
          case Method::StrQbt: {
            QbtFactors f = str_qbt_basis(*qm, r);
            rom = reduce_with_petrov(m, f.Vb, f.Wb);
            break;
          }
        }
        reduce_s = seconds(t0, clock::now());
      } catch (const std::exception& e) {
        fail = e.what();
        log(LogLevel::Warn, "sweep: " + method_name(method) + " r=" + std::to_string(r) +
                                " failed: " + fail);
      }

      for (size_t in = 0; in < input_levels.size(); ++in) {
        SweepRecord rec;
        rec.method = method_name(method);
        rec.r = r;
        rec.input = input_names[in];
        rec.reduce_s = reduce_s;
        rec.converged = converged;
        if (!fail.empty()) {
          rec.note = fail;
          records.push_back(rec);
          continue;
        }
        try {
          const auto t1 = clock::now();
          const Trajectory yr = integrate_reduced(
              rom, m, constant_input(input_levels[in]), cfg.T, cfg.dt,
              Eigen::VectorXd::Zero(rom.r()), Eigen::VectorXd::Zero(rom.r()));
          rec.sim_s = seconds(t1, clock::now());
          rec.rel_linf = linf_rel_error(refs[in], yr);
        } catch (const std::exception& e) {
          rec.note = e.what();
          log(LogLevel::Warn, "sweep: simulation of " + rec.method + " r=" + std::to_string(r) +
                                  " failed: " + rec.note);
        }
        records.push_back(rec);
      }
    }
  }
  return records;
}

}  // namespace gridmor
