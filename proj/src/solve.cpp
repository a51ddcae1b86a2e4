#include "hmpc/solve.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

namespace hmpc {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max-iter";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

double constraint_violation_l1(const ProblemEvaluation& ev) {
  double v = ev.c_eq.cwiseAbs().sum();
  for (int i = 0; i < ev.c_in.size(); ++i) v += std::max(0.0, ev.c_in[i]);
  return v;
}

double constraint_violation_inf(const ProblemEvaluation& ev) {
  double v = ev.c_eq.size() > 0 ? ev.c_eq.cwiseAbs().maxCoeff() : 0.0;
  for (int i = 0; i < ev.c_in.size(); ++i) v = std::max(v, ev.c_in[i]);
  return v;
}

std::string describe_row(const PlanningProblem& problem, int row, double value) {
  std::ostringstream os;
  const int ns = problem.num_safety();
  if (row < ns) {
    const int step = row / 6 + 1;
    static const char* kinds[6] = {"rollover+", "rollover-", "front-slip+",
                                   "front-slip-", "rear-slip+", "rear-slip-"};
    os << kinds[row % 6] << " at step " << step << " (violation " << value
       << ")";
  } else {
    const CollisionConstraint& c = problem.collisions.rows[row - ns];
    os << "collision with obstacle " << c.obstacle_id << " at step " << c.step
       << " pair " << static_cast<int>(c.pair) << " (scaled violation "
       << value << ")";
  }
  return os.str();
}

struct QPBuild {
  QPProblem qp;
  std::vector<int> rows;   // selected inequality row indices
  int num_elastic = 0;     // slack variables appended after the step
};

// Assembles the SQP subproblem. In elastic mode every equality row gets a
// +/- slack pair and every selected inequality row a slack, all penalized in
// l1; simple bounds stay hard, which makes the relaxed QP always feasible.
QPBuild build_qp(const PlanningProblem& problem, const ProblemEvaluation& ev,
                 const Eigen::MatrixXd& hessian, const Eigen::VectorXd& z,
                 const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                 double reg, double screen_distance, bool elastic,
                 double elastic_penalty) {
  const int nv = problem.num_vars();
  const int me = problem.num_eq();
  const int ns = problem.num_safety();

  QPBuild build;
  // Screening: all safety rows plus collision rows whose disc distance is
  // within screen_distance of becoming active.
  build.rows.reserve(ns + 64);
  for (int r = 0; r < ns; ++r) build.rows.push_back(r);
  for (std::size_t k = 0; k < problem.collisions.rows.size(); ++k) {
    const double clearance = problem.collisions.rows[k].clearance;
    const double ratio = screen_distance / clearance;
    const double threshold = 1.0 - ratio * ratio;  // value at d = screen dist
    if (ev.c_in[ns + static_cast<int>(k)] >= threshold) {
      build.rows.push_back(ns + static_cast<int>(k));
    }
  }
  const int mi = static_cast<int>(build.rows.size());
  const int n_elastic = elastic ? 2 * me + mi : 0;
  const int n_total = nv + n_elastic;
  build.num_elastic = n_elastic;

  QPProblem& qp = build.qp;
  std::vector<Eigen::Triplet<double>> h_trips;
  h_trips.reserve(static_cast<std::size_t>(nv) * nv / 4);
  for (int r = 0; r < nv; ++r) {
    for (int c = 0; c < nv; ++c) {
      const double v = hessian(r, c) + (r == c ? reg : 0.0);
      if (v != 0.0) h_trips.emplace_back(r, c, v);
    }
  }
  for (int i = nv; i < n_total; ++i) h_trips.emplace_back(i, i, 1e-8);
  qp.H.resize(n_total, n_total);
  qp.H.setFromTriplets(h_trips.begin(), h_trips.end());

  qp.g = Eigen::VectorXd::Zero(n_total);
  qp.g.head(nv) = ev.grad;
  qp.g.tail(n_elastic).setConstant(elastic_penalty);

  // Equalities: J_eq p (- e+ + e-) = -c_eq.
  std::vector<Eigen::Triplet<double>> a_trips;
  for (int r = 0; r < ev.jac_eq.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
             ev.jac_eq, r);
         it; ++it) {
      a_trips.emplace_back(r, static_cast<int>(it.col()), it.value());
    }
  }
  if (elastic) {
    for (int r = 0; r < me; ++r) {
      a_trips.emplace_back(r, nv + 2 * r + 0, -1.0);
      a_trips.emplace_back(r, nv + 2 * r + 1, 1.0);
    }
  }
  qp.A.resize(me, n_total);
  qp.A.setFromTriplets(a_trips.begin(), a_trips.end());
  qp.b = -ev.c_eq;

  // Selected inequalities: J_in p (- e) <= -c_in.
  std::vector<Eigen::Triplet<double>> c_trips;
  qp.d.resize(mi);
  for (int r = 0; r < mi; ++r) {
    const int src = build.rows[r];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
             ev.jac_in, src);
         it; ++it) {
      c_trips.emplace_back(r, static_cast<int>(it.col()), it.value());
    }
    if (elastic) c_trips.emplace_back(r, nv + 2 * me + r, -1.0);
    qp.d[r] = -ev.c_in[src];
  }
  qp.C.resize(mi, n_total);
  qp.C.setFromTriplets(c_trips.begin(), c_trips.end());

  qp.lb = Eigen::VectorXd::Constant(n_total, -kInfinity);
  qp.ub = Eigen::VectorXd::Constant(n_total, kInfinity);
  qp.lb.head(nv) = lb - z;
  qp.ub.head(nv) = ub - z;
  qp.lb.tail(n_elastic).setZero();
  return build;
}

}  // namespace

InitialGuess straight_line_guess(const PlanningProblem& problem) {
  InitialGuess guess;
  guess.states.resize(problem.n);
  guess.inputs.assign(problem.n - 1, {0.0, 0.0});
  double t = 0.0;
  for (int i = 0; i < problem.n; ++i) {
    t += problem.dt[i];
    VehicleState s = problem.x0;
    s.x = problem.x0.x + problem.x0.vx * t;
    s.theta = 0.0;
    s.delta = 0.0;
    s.vy = 0.0;
    s.r = 0.0;
    guess.states[i] = s;
  }
  return guess;
}

InitialGuess shift_warm_start(const TrajectorySolution& prev,
                              std::span<const double> dt_schedule) {
  (void)dt_schedule;
  InitialGuess guess;
  guess.states = prev.states;
  if (!guess.states.empty()) {
    guess.states.erase(guess.states.begin());
    guess.states.push_back(guess.states.back());
  }
  guess.inputs = prev.inputs;
  if (!guess.inputs.empty()) {
    guess.inputs.erase(guess.inputs.begin());
    guess.inputs.push_back(guess.inputs.back());
  }
  return guess;
}

TrajectorySolution solve(const PlanningProblem& problem,
                         const std::optional<InitialGuess>& warm_start,
                         const SolverSettings& settings) {
  const auto t_start = std::chrono::steady_clock::now();
  const int nv = problem.num_vars();
  const Eigen::VectorXd lb = problem.lower_bounds();
  const Eigen::VectorXd ub = problem.upper_bounds();

  const InitialGuess guess =
      warm_start.has_value() ? *warm_start : straight_line_guess(problem);
  Eigen::VectorXd z = problem.pack(guess.states, guess.inputs);
  for (int i = 0; i < nv; ++i) z[i] = std::clamp(z[i], lb[i], ub[i]);

  TrajectorySolution result;
  ProblemEvaluation ev;
  if (!evaluate_problem(problem, z, true, &ev)) {
    // The guess itself is outside the model domain; retry from straight.
    const InitialGuess fallback = straight_line_guess(problem);
    z = problem.pack(fallback.states, fallback.inputs);
    for (int i = 0; i < nv; ++i) z[i] = std::clamp(z[i], lb[i], ub[i]);
    if (!evaluate_problem(problem, z, true, &ev)) {
      result.status = SolveStatus::infeasible;
      result.diagnostic = "initial guess not evaluable: " + ev.dynamics_error;
      return result;
    }
  }

  const bool trace = std::getenv("HMPC_SOLVER_TRACE") != nullptr;
  // Levenberg damping. The floor keeps the nearly-flat lateral directions
  // from sloshing (their true curvature is ~0 on a free road); raising it on
  // stalls contracts the step until the stationarity residual settles.
  constexpr double kRegFloor = 1e-3;
  constexpr double kRegCap = 1e8;
  double reg = 1e-2;
  double merit_penalty = 1.0;
  double best_feas = std::numeric_limits<double>::infinity();
  double best_obj = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_z = z;
  bool converged = false;
  int iterations = 0;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> eq_normal_lu;  // for SOC

  for (int iter = 1; iter <= settings.max_iterations; ++iter) {
    iterations = iter;

    bool elastic = settings.soft_collisions;
    QPBuild build = build_qp(problem, ev, z, lb, ub, reg,
                             settings.screen_distance, elastic,
                             settings.elastic_penalty);
    QPSolution qps = solve_qp(build.qp, settings.qp);
    if (!qps.ok && !elastic) {
      elastic = true;
      build = build_qp(problem, ev, z, lb, ub, reg, settings.screen_distance,
                       true, settings.elastic_penalty);
      qps = solve_qp(build.qp, settings.qp);
    }
    if (!qps.ok) {
      reg = std::min(reg * 10.0, kRegCap);
      if (reg >= kRegCap) break;
      continue;
    }

    const Eigen::VectorXd p = qps.p.head(nv);

    // KKT residual with the QP multipliers (the Hessian only multiplies p,
    // so at p -> 0 this is the true NLP stationarity residual).
    Eigen::VectorXd stat = ev.grad;
    stat += ev.jac_eq.transpose() * qps.y;
    for (std::size_t r = 0; r < build.rows.size(); ++r) {
      const int src = build.rows[r];
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
               ev.jac_in, src);
           it; ++it) {
        stat[it.col()] += it.value() * qps.z[static_cast<int>(r)];
      }
    }
    stat -= qps.z_lower.head(nv);
    stat += qps.z_upper.head(nv);
    const double stat_res = stat.lpNorm<Eigen::Infinity>();
    const double feas = constraint_violation_inf(ev);

    if (trace) {
      std::fprintf(stderr,
                   "[sqp %3d] qp_ok=%d qp_it=%2d feas=%9.2e stat=%9.2e "
                   "|p|=%9.2e obj=%10.4e reg=%7.1e rows=%zu\n",
                   iter, qps.ok, qps.iterations, feas, stat_res,
                   p.lpNorm<Eigen::Infinity>(), ev.objective, reg,
                   build.rows.size());
    }
    if (feas < best_feas ||
        (feas <= settings.feasibility_tol && ev.objective < best_obj)) {
      best_feas = feas;
      best_obj = ev.objective;
      best_z = z;
    }
    if (feas <= settings.feasibility_tol &&
        stat_res <= settings.optimality_tol) {
      converged = true;
      break;
    }

    // l1 merit line search.
    const double viol0 = constraint_violation_l1(ev);
    double dual_norm = qps.y.size() > 0 ? qps.y.lpNorm<Eigen::Infinity>() : 0.0;
    if (qps.z.size() > 0) {
      dual_norm = std::max(dual_norm, qps.z.lpNorm<Eigen::Infinity>());
    }
    merit_penalty = std::max(merit_penalty, 1.1 * dual_norm + 1.0);
    const double phi0 = ev.objective + merit_penalty * viol0;
    const double descent = ev.grad.dot(p) - merit_penalty * viol0;

    // Second-order correction: restore the constraints that the full step
    // bent (equalities plus any inequality rows it pushed infeasible).
    const auto correct_step = [&](const ProblemEvaluation& at_trial,
                                  Eigen::VectorXd* z_out) -> bool {
      std::vector<int> viol_rows;
      for (int r = 0; r < at_trial.c_in.size(); ++r) {
        if (at_trial.c_in[r] > settings.feasibility_tol) viol_rows.push_back(r);
      }
      const int extra = static_cast<int>(viol_rows.size());
      const int rows = problem.num_eq() + extra;
      std::vector<Eigen::Triplet<double>> trips;
      for (int r = 0; r < ev.jac_eq.outerSize(); ++r) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 ev.jac_eq, r);
             it; ++it) {
          trips.emplace_back(r, static_cast<int>(it.col()), it.value());
        }
      }
      for (int k = 0; k < extra; ++k) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
                 ev.jac_in, viol_rows[k]);
             it; ++it) {
          trips.emplace_back(problem.num_eq() + k, static_cast<int>(it.col()),
                             it.value());
        }
      }
      Eigen::SparseMatrix<double, Eigen::RowMajor> jac(rows, nv);
      jac.setFromTriplets(trips.begin(), trips.end());
      Eigen::VectorXd resid(rows);
      resid.head(problem.num_eq()) = at_trial.c_eq;
      for (int k = 0; k < extra; ++k) {
        resid[problem.num_eq() + k] = at_trial.c_in[viol_rows[k]];
      }
      Eigen::SparseMatrix<double> jjt = (jac * jac.transpose()).pruned();
      for (int i = 0; i < jjt.rows(); ++i) jjt.coeffRef(i, i) += 1e-9;
      eq_normal_lu.compute(jjt);
      if (eq_normal_lu.info() != Eigen::Success) return false;
      const Eigen::VectorXd w = eq_normal_lu.solve(-resid);
      Eigen::VectorXd z_soc = z + p + jac.transpose() * w;
      for (int i = 0; i < nv; ++i) z_soc[i] = std::clamp(z_soc[i], lb[i], ub[i]);
      *z_out = z_soc;
      return true;
    };

    ProblemEvaluation trial_ev;
    bool accepted = false;
    double alpha = 1.0;
    Eigen::VectorXd z_trial;
    for (int backtrack = 0; backtrack < 14; ++backtrack) {
      z_trial = z + alpha * p;
      if (evaluate_problem(problem, z_trial, false, &trial_ev)) {
        const double phi =
            trial_ev.objective + merit_penalty * constraint_violation_l1(trial_ev);
        if (phi <= phi0 + 1e-4 * alpha * std::min(descent, 0.0)) {
          accepted = true;
          break;
        }
        if (backtrack == 0) {
          Eigen::VectorXd z_soc;
          if (correct_step(trial_ev, &z_soc)) {
            ProblemEvaluation soc_ev;
            if (evaluate_problem(problem, z_soc, false, &soc_ev)) {
              const double phi_soc =
                  soc_ev.objective +
                  merit_penalty * constraint_violation_l1(soc_ev);
              if (phi_soc <= phi0 + 1e-4 * std::min(descent, 0.0)) {
                z_trial = z_soc;
                trial_ev = soc_ev;
                accepted = true;
                break;
              }
            }
          }
        }
      }
      alpha *= 0.5;
    }

    if (!accepted) {
      reg = std::min(reg * 10.0, kRegCap);
      if (reg >= kRegCap) break;
      continue;
    }

    // Levenberg-Marquardt style damping from the merit-model quality.
    const double phi_new =
        trial_ev.objective + merit_penalty * constraint_violation_l1(trial_ev);
    const double actual = phi0 - phi_new;
    const double predicted = -alpha * std::min(descent, -1e-16);
    const double ratio = actual / predicted;
    z = z_trial;
    if (!evaluate_problem(problem, z, true, &ev)) break;  // cannot happen
    if (ratio < 0.1 || actual <= 1e-9 * (1.0 + std::abs(phi0))) {
      reg = std::min(reg * 4.0, kRegCap);
    } else if (ratio > 0.5 && alpha == 1.0) {
      reg = std::max(reg * 0.5, kRegFloor);
    }
  }

  // Final bookkeeping at the returned iterate.
  if (!converged) {
    ProblemEvaluation best_ev;
    if (evaluate_problem(problem, best_z, false, &best_ev)) {
      z = best_z;
      ev.objective = best_ev.objective;
      ev.c_eq = best_ev.c_eq;
      ev.c_in = best_ev.c_in;
    }
  }
  problem.unpack(z, &result.states, &result.inputs);
  result.objective = ev.objective;
  result.iterations = iterations;
  result.max_violation = constraint_violation_inf(ev);
  if (converged) {
    result.status = SolveStatus::converged;
  } else if (result.max_violation > 1e-3) {
    result.status = SolveStatus::infeasible;
    // Report the worst offenders.
    std::vector<std::pair<double, int>> offenders;
    for (int i = 0; i < ev.c_in.size(); ++i) {
      if (ev.c_in[i] > settings.feasibility_tol) {
        offenders.emplace_back(ev.c_in[i], i);
      }
    }
    std::sort(offenders.rbegin(), offenders.rend());
    std::ostringstream os;
    os << "no feasible point found; most violated:";
    for (std::size_t i = 0; i < std::min<std::size_t>(3, offenders.size());
         ++i) {
      os << " [" << describe_row(problem, offenders[i].second,
                                 offenders[i].first)
         << "]";
    }
    if (ev.c_eq.size() > 0) {
      os << " dynamics defect " << ev.c_eq.cwiseAbs().maxCoeff();
    }
    result.diagnostic = os.str();
  } else {
    result.status = SolveStatus::max_iter;
  }
  result.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace hmpc
