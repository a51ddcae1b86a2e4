#include "hmpc/qp.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace hmpc {

namespace {

constexpr double kUnbounded = 1e19;  // bounds beyond this are absent

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  }
  return alpha;
}

}  // namespace

QPSolution solve_qp(const QPProblem& qp, const QPSettings& settings) {
  const int nv = static_cast<int>(qp.g.size());
  const int me = static_cast<int>(qp.b.size());
  const int mi = static_cast<int>(qp.d.size());

  std::vector<int> lower_idx, upper_idx;
  for (int i = 0; i < nv; ++i) {
    if (qp.lb[i] > -kUnbounded) lower_idx.push_back(i);
    if (qp.ub[i] < kUnbounded) upper_idx.push_back(i);
  }
  const int nl = static_cast<int>(lower_idx.size());
  const int nu = static_cast<int>(upper_idx.size());
  const int comp_count = mi + nl + nu;

  QPSolution sol;
  sol.p = Eigen::VectorXd::Zero(nv);
  // Start strictly inside the box.
  for (int i = 0; i < nv; ++i) {
    const double lo = qp.lb[i];
    const double hi = qp.ub[i];
    double v = 0.0;
    if (lo > -kUnbounded && hi < kUnbounded) {
      const double margin = 0.01 * std::min(1.0, 0.5 * (hi - lo));
      v = std::clamp(v, lo + margin, hi - margin);
    } else if (lo > -kUnbounded) {
      v = std::max(v, lo + 0.01);
    } else if (hi < kUnbounded) {
      v = std::min(v, hi - 0.01);
    }
    sol.p[i] = v;
  }
  sol.y = Eigen::VectorXd::Zero(me);

  Eigen::VectorXd s(mi), z(mi);
  if (mi > 0) {
    const Eigen::VectorXd slack = qp.d - qp.C * sol.p;
    for (int i = 0; i < mi; ++i) s[i] = std::max(1.0, slack[i]);
    z.setOnes();
  }
  Eigen::VectorXd sl(nl), zl(nl), su(nu), zu(nu);
  for (int k = 0; k < nl; ++k) {
    sl[k] = std::max(0.1, sol.p[lower_idx[k]] - qp.lb[lower_idx[k]]);
    zl[k] = 1.0;
  }
  for (int k = 0; k < nu; ++k) {
    su[k] = std::max(0.1, qp.ub[upper_idx[k]] - sol.p[upper_idx[k]]);
    zu[k] = 1.0;
  }

  const double scale =
      std::max({1.0, qp.g.lpNorm<Eigen::Infinity>(),
                me > 0 ? qp.b.lpNorm<Eigen::Infinity>() : 0.0,
                mi > 0 ? qp.d.lpNorm<Eigen::Infinity>() : 0.0});
  const int kkt_dim = nv + me;

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  bool pattern_analyzed = false;
  std::vector<Eigen::Triplet<double>> trips;

  // Row-major copies for cheap row iteration.
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& C = qp.C;
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& A = qp.A;

  Eigen::VectorXd rd(nv), re(me), rc(mi), rl(nl), ru(nu);
  Eigen::VectorXd dp(nv), dy(me), ds(mi), dz(mi), dsl(nl), dzl(nl), dsu(nu),
      dzu(nu);
  Eigen::VectorXd ds_aff(mi), dz_aff(mi), dsl_aff(nl), dzl_aff(nl),
      dsu_aff(nu), dzu_aff(nu);

  for (int iter = 0; iter < settings.max_iter; ++iter) {
    // Residuals.
    rd = qp.H.selfadjointView<Eigen::Lower>() * sol.p + qp.g;
    if (me > 0) rd += A.transpose() * sol.y;
    if (mi > 0) rd += C.transpose() * z;
    for (int k = 0; k < nl; ++k) rd[lower_idx[k]] -= zl[k];
    for (int k = 0; k < nu; ++k) rd[upper_idx[k]] += zu[k];
    if (me > 0) re = A * sol.p - qp.b;
    if (mi > 0) rc = C * sol.p + s - qp.d;
    for (int k = 0; k < nl; ++k) rl[k] = sol.p[lower_idx[k]] - qp.lb[lower_idx[k]] - sl[k];
    for (int k = 0; k < nu; ++k) ru[k] = qp.ub[upper_idx[k]] - sol.p[upper_idx[k]] - su[k];

    double mu = 0.0;
    if (comp_count > 0) {
      mu = (mi > 0 ? s.dot(z) : 0.0) + (nl > 0 ? sl.dot(zl) : 0.0) +
           (nu > 0 ? su.dot(zu) : 0.0);
      mu /= comp_count;
    }

    sol.dual_residual = rd.lpNorm<Eigen::Infinity>();
    sol.primal_residual =
        std::max({me > 0 ? re.lpNorm<Eigen::Infinity>() : 0.0,
                  mi > 0 ? rc.lpNorm<Eigen::Infinity>() : 0.0,
                  nl > 0 ? rl.lpNorm<Eigen::Infinity>() : 0.0,
                  nu > 0 ? ru.lpNorm<Eigen::Infinity>() : 0.0});
    sol.gap = mu;
    sol.iterations = iter;
    if (sol.dual_residual <= settings.tolerance * scale &&
        sol.primal_residual <= settings.tolerance * scale &&
        mu <= settings.tolerance * scale) {
      sol.ok = true;
      sol.z = z;
      sol.z_lower = Eigen::VectorXd::Zero(nv);
      sol.z_upper = Eigen::VectorXd::Zero(nv);
      for (int k = 0; k < nl; ++k) sol.z_lower[lower_idx[k]] = zl[k];
      for (int k = 0; k < nu; ++k) sol.z_upper[upper_idx[k]] = zu[k];
      return sol;
    }

    // KKT matrix [H + W, A'; A, -delta I] with W collecting barrier terms.
    trips.clear();
    for (int col = 0; col < qp.H.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(qp.H, col); it; ++it) {
        if (it.row() >= it.col()) {
          trips.emplace_back(static_cast<int>(it.row()),
                             static_cast<int>(it.col()), it.value());
          if (it.row() != it.col()) {
            trips.emplace_back(static_cast<int>(it.col()),
                               static_cast<int>(it.row()), it.value());
          }
        }
      }
    }
    for (int i = 0; i < mi; ++i) {
      const double w = z[i] / s[i];
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it1(C, i);
           it1; ++it1) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it2(C, i);
             it2; ++it2) {
          trips.emplace_back(static_cast<int>(it1.col()),
                             static_cast<int>(it2.col()),
                             w * it1.value() * it2.value());
        }
      }
    }
    for (int k = 0; k < nl; ++k) {
      trips.emplace_back(lower_idx[k], lower_idx[k], zl[k] / sl[k]);
    }
    for (int k = 0; k < nu; ++k) {
      trips.emplace_back(upper_idx[k], upper_idx[k], zu[k] / su[k]);
    }
    for (int i = 0; i < A.rows(); ++i) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(A, i);
           it; ++it) {
        trips.emplace_back(nv + i, static_cast<int>(it.col()), it.value());
        trips.emplace_back(static_cast<int>(it.col()), nv + i, it.value());
      }
    }
    for (int i = 0; i < me; ++i) {
      trips.emplace_back(nv + i, nv + i, -1e-11 * scale);
    }
    // Keep the diagonal structurally present.
    for (int i = 0; i < nv; ++i) trips.emplace_back(i, i, 0.0);

    Eigen::SparseMatrix<double> kkt(kkt_dim, kkt_dim);
    kkt.setFromTriplets(trips.begin(), trips.end());
    kkt.makeCompressed();
    if (!pattern_analyzed) {
      lu.analyzePattern(kkt);
      pattern_analyzed = true;
    }
    lu.factorize(kkt);
    if (lu.info() != Eigen::Success) {
      sol.ok = false;
      return sol;
    }

    const auto solve_direction =
        [&](const Eigen::VectorXd& comp_c, const Eigen::VectorXd& comp_l,
            const Eigen::VectorXd& comp_u, Eigen::VectorXd* out_dp,
            Eigen::VectorXd* out_dy, Eigen::VectorXd* out_ds,
            Eigen::VectorXd* out_dz, Eigen::VectorXd* out_dsl,
            Eigen::VectorXd* out_dzl, Eigen::VectorXd* out_dsu,
            Eigen::VectorXd* out_dzu) {
          Eigen::VectorXd rhs = Eigen::VectorXd::Zero(kkt_dim);
          rhs.head(nv) = -rd;
          for (int i = 0; i < mi; ++i) {
            const double coeff = comp_c[i] / s[i] + z[i] / s[i] * rc[i];
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator
                     it(C, i);
                 it; ++it) {
              rhs[it.col()] -= it.value() * coeff;
            }
          }
          for (int k = 0; k < nl; ++k) {
            rhs[lower_idx[k]] += comp_l[k] / sl[k] - zl[k] / sl[k] * rl[k];
          }
          for (int k = 0; k < nu; ++k) {
            rhs[upper_idx[k]] -= comp_u[k] / su[k] - zu[k] / su[k] * ru[k];
          }
          if (me > 0) rhs.segment(nv, me) = -re;

          const Eigen::VectorXd step = lu.solve(rhs);
          *out_dp = step.head(nv);
          if (me > 0) *out_dy = step.segment(nv, me);
          if (mi > 0) {
            *out_ds = -rc - C * (*out_dp);
            for (int i = 0; i < mi; ++i) {
              (*out_dz)[i] = (comp_c[i] - z[i] * (*out_ds)[i]) / s[i];
            }
          }
          for (int k = 0; k < nl; ++k) {
            (*out_dsl)[k] = (*out_dp)[lower_idx[k]] + rl[k];
            (*out_dzl)[k] = (comp_l[k] - zl[k] * (*out_dsl)[k]) / sl[k];
          }
          for (int k = 0; k < nu; ++k) {
            (*out_dsu)[k] = ru[k] - (*out_dp)[upper_idx[k]];
            (*out_dzu)[k] = (comp_u[k] - zu[k] * (*out_dsu)[k]) / su[k];
          }
        };

    // Affine (predictor) direction.
    Eigen::VectorXd comp_c = mi > 0 ? (-s.array() * z.array()).matrix()
                                    : Eigen::VectorXd();
    Eigen::VectorXd comp_l = nl > 0 ? (-sl.array() * zl.array()).matrix()
                                    : Eigen::VectorXd();
    Eigen::VectorXd comp_u = nu > 0 ? (-su.array() * zu.array()).matrix()
                                    : Eigen::VectorXd();
    solve_direction(comp_c, comp_l, comp_u, &dp, &dy, &ds_aff, &dz_aff,
                    &dsl_aff, &dzl_aff, &dsu_aff, &dzu_aff);

    double alpha_p_aff = 1.0;
    double alpha_d_aff = 1.0;
    if (mi > 0) {
      alpha_p_aff = std::min(alpha_p_aff, max_step(s, ds_aff));
      alpha_d_aff = std::min(alpha_d_aff, max_step(z, dz_aff));
    }
    if (nl > 0) {
      alpha_p_aff = std::min(alpha_p_aff, max_step(sl, dsl_aff));
      alpha_d_aff = std::min(alpha_d_aff, max_step(zl, dzl_aff));
    }
    if (nu > 0) {
      alpha_p_aff = std::min(alpha_p_aff, max_step(su, dsu_aff));
      alpha_d_aff = std::min(alpha_d_aff, max_step(zu, dzu_aff));
    }

    double sigma = 0.0;
    if (comp_count > 0 && mu > 0.0) {
      double mu_aff = 0.0;
      if (mi > 0) {
        mu_aff += (s + alpha_p_aff * ds_aff).dot(z + alpha_d_aff * dz_aff);
      }
      if (nl > 0) {
        mu_aff += (sl + alpha_p_aff * dsl_aff).dot(zl + alpha_d_aff * dzl_aff);
      }
      if (nu > 0) {
        mu_aff += (su + alpha_p_aff * dsu_aff).dot(zu + alpha_d_aff * dzu_aff);
      }
      mu_aff /= comp_count;
      sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);
    }

    // Corrector direction reuses the factorization.
    if (mi > 0) {
      comp_c = (-s.array() * z.array() - ds_aff.array() * dz_aff.array() +
                sigma * mu)
                   .matrix();
    }
    if (nl > 0) {
      comp_l = (-sl.array() * zl.array() - dsl_aff.array() * dzl_aff.array() +
                sigma * mu)
                   .matrix();
    }
    if (nu > 0) {
      comp_u = (-su.array() * zu.array() - dsu_aff.array() * dzu_aff.array() +
                sigma * mu)
                   .matrix();
    }
    solve_direction(comp_c, comp_l, comp_u, &dp, &dy, &ds, &dz, &dsl, &dzl,
                    &dsu, &dzu);

    double alpha_p = 1.0;
    double alpha_d = 1.0;
    if (mi > 0) {
      alpha_p = std::min(alpha_p, max_step(s, ds));
      alpha_d = std::min(alpha_d, max_step(z, dz));
    }
    if (nl > 0) {
      alpha_p = std::min(alpha_p, max_step(sl, dsl));
      alpha_d = std::min(alpha_d, max_step(zl, dzl));
    }
    if (nu > 0) {
      alpha_p = std::min(alpha_p, max_step(su, dsu));
      alpha_d = std::min(alpha_d, max_step(zu, dzu));
    }
    alpha_p = std::min(1.0, settings.fraction_to_boundary * alpha_p);
    alpha_d = std::min(1.0, settings.fraction_to_boundary * alpha_d);

    sol.p += alpha_p * dp;
    if (me > 0) sol.y += alpha_d * dy;
    if (mi > 0) {
      s += alpha_p * ds;
      z += alpha_d * dz;
    }
    if (nl > 0) {
      sl += alpha_p * dsl;
      zl += alpha_d * dzl;
    }
    if (nu > 0) {
      su += alpha_p * dsu;
      zu += alpha_d * dzu;
    }
  }

  sol.ok = false;
  // Expose whatever multipliers we have; the caller decides what to do.
  sol.z = z;
  sol.z_lower = Eigen::VectorXd::Zero(nv);
  sol.z_upper = Eigen::VectorXd::Zero(nv);
  for (int k = 0; k < nl; ++k) sol.z_lower[lower_idx[k]] = zl[k];
  for (int k = 0; k < nu; ++k) sol.z_upper[upper_idx[k]] = zu[k];
  return sol;
}

}  // namespace hmpc
