#include "msda/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace msda::qp {
namespace {

// f(z) = 1/2 z^T H z + g^T z over constraints C z (= or >=) r; the first
// n_eq rows of C are equalities.
struct Engine {
  Matrix H;
  Vector g;
  Matrix C;
  Vector r;
  Index n_eq = 0;
};

struct EngineResult {
  Vector z;
  Vector multipliers;  // one per row of C, zero outside the working set
  int iterations = 0;
};

// Null-space step of the equality-constrained subproblem on the working set.
struct Step {
  Vector p;
  bool ray = false;  // zero-curvature descent direction; step length is not capped at 1
};

Step subproblem_step(const Engine& e, const Matrix& Z, const Vector& grad) {
  Step s;
  const Index d = e.H.rows();
  if (Z.cols() == 0) {
    s.p = Vector::Zero(d);
    return s;
  }
  const Matrix Hr = Z.transpose() * e.H * Z;
  const Vector cr = Z.transpose() * grad;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Hr);
  const Vector& lam = eig.eigenvalues();
  const Matrix& Q = eig.eigenvectors();
  const Vector u = Q.transpose() * cr;
  const double lam_tol = 1e-11 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  const double grad_tol = 1e-9 * (1.0 + grad.cwiseAbs().maxCoeff());

  Vector newton = Vector::Zero(lam.size());
  Vector ray = Vector::Zero(lam.size());
  for (Index i = 0; i < lam.size(); ++i) {
    if (lam(i) > lam_tol) {
      newton(i) = -u(i) / lam(i);
    } else if (std::abs(u(i)) > grad_tol) {
      ray(i) = -u(i);
      s.ray = true;
    }
  }
  s.p = Z * (Q * (s.ray ? ray : newton));
  return s;
}

EngineResult run_active_set(const Engine& e, Vector z, std::vector<Index> working, int max_iter,
                            double tol) {
  const Index d = e.H.rows();
  const Index m = e.C.rows();
  EngineResult out;
  // True once z minimizes f on the current working set; only then are the
  // multipliers examined.
  bool stationary = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    const Vector grad = e.H * z + e.g;

    Matrix Aw(static_cast<Index>(working.size()), d);
    for (std::size_t k = 0; k < working.size(); ++k) Aw.row(static_cast<Index>(k)) = e.C.row(working[k]);

    Eigen::JacobiSVD<Matrix> svd;
    Index rank = 0;
    Matrix Z;
    if (working.empty()) {
      Z = Matrix::Identity(d, d);
    } else {
      svd.compute(Aw, Eigen::ComputeFullU | Eigen::ComputeFullV);
      svd.setThreshold(1e-12);
      rank = svd.rank();
      Z = svd.matrixV().rightCols(d - rank);
    }

    if (!stationary) {
      const Step step = subproblem_step(e, Z, grad);
      const double pnorm = step.p.size() ? step.p.cwiseAbs().maxCoeff() : 0.0;
      if (step.ray || pnorm > tol * (1.0 + z.cwiseAbs().maxCoeff())) {
        double alpha = step.ray ? std::numeric_limits<double>::infinity() : 1.0;
        Index blocking = -1;
        const double pscale = step.p.norm();
        for (Index i = e.n_eq; i < m; ++i) {
          if (std::find(working.begin(), working.end(), i) != working.end()) continue;
          const double ap = e.C.row(i).dot(step.p);
          if (ap >= -1e-14 * e.C.row(i).norm() * pscale) continue;
          const double a = std::max(0.0, (e.r(i) - e.C.row(i).dot(z)) / ap);
          if (a < alpha) {
            alpha = a;
            blocking = i;
          }
        }
        if (blocking < 0 && step.ray) {
          throw UnboundedError("quadratic program is unbounded below on the feasible set");
        }
        z += alpha * step.p;
        if (blocking >= 0) {
          working.push_back(blocking);
          std::sort(working.begin(), working.end());
        } else {
          stationary = !step.ray;
        }
        continue;
      }
      stationary = true;
    }

    // Multipliers: solve Aw^T lambda = grad in the least-squares sense.
    Vector lambda = Vector::Zero(m);
    if (!working.empty() && rank > 0) {
      const Vector coeff = (svd.matrixV().leftCols(rank).transpose() * grad).array() /
                           svd.singularValues().head(rank).array();
      const Vector lw = svd.matrixU().leftCols(rank) * coeff;
      for (std::size_t k = 0; k < working.size(); ++k) lambda(working[k]) = lw(static_cast<Index>(k));
    }
    const double dual_tol = 1e-11 * (1.0 + grad.cwiseAbs().maxCoeff());
    Index drop = -1;
    double most_negative = -dual_tol;
    for (Index idx : working) {
      if (idx < e.n_eq) continue;
      if (lambda(idx) < most_negative) {
        most_negative = lambda(idx);
        drop = idx;
      }
    }
    if (drop < 0) {
      out.z = std::move(z);
      out.multipliers = std::move(lambda);
      return out;
    }
    working.erase(std::find(working.begin(), working.end(), drop));
    stationary = false;
  }
  throw IterationLimitError("active-set iteration cap of " + std::to_string(max_iter) + " reached",
                            z);
}

Vector min_norm_solve(const Matrix& E, const Vector& f) {
  Eigen::JacobiSVD<Matrix> svd(E, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  return svd.solve(f);
}

}  // namespace

double KktReport::max_residual() const {
  return std::max({stationarity, primal_violation, complementarity, dual_violation});
}

void Problem::validate() const {
  const Index d = dim();
  if (target.size() != objective.rows()) {
    throw DimensionError("qp: objective has " + std::to_string(objective.rows()) +
                         " rows but target has " + std::to_string(target.size()));
  }
  if (inequality.rows() > 0 && inequality.cols() != d) {
    throw DimensionError("qp: inequality matrix has wrong column count");
  }
  if (inequality.rows() != inequality_rhs.size()) {
    throw DimensionError("qp: inequality rhs size mismatch");
  }
  if (equality.rows() > 0 && equality.cols() != d) {
    throw DimensionError("qp: equality matrix has wrong column count");
  }
  if (equality.rows() != equality_rhs.size()) {
    throw DimensionError("qp: equality rhs size mismatch");
  }
  if (ridge < 0.0) throw DataError("qp: ridge must be non-negative");
}

double objective_value(const Problem& problem, const Vector& z) {
  return (problem.objective * z - problem.target).squaredNorm() + problem.ridge * z.squaredNorm();
}

KktReport kkt_report(const Problem& problem, const Vector& z, const Vector& lambda,
                     const Vector& nu) {
  KktReport k;
  const Index d = problem.dim();
  Vector grad = 2.0 * (problem.objective.transpose() * (problem.objective * z - problem.target)) +
                2.0 * problem.ridge * z;
  Vector residual = grad;
  if (problem.inequality.rows() > 0) residual -= problem.inequality.transpose() * lambda;
  if (problem.equality.rows() > 0) residual -= problem.equality.transpose() * nu;
  k.stationarity = d > 0 ? residual.cwiseAbs().maxCoeff() : 0.0;
  for (Index i = 0; i < problem.inequality.rows(); ++i) {
    const double slack = problem.inequality.row(i).dot(z) - problem.inequality_rhs(i);
    k.primal_violation = std::max(k.primal_violation, -slack);
    k.complementarity = std::max(k.complementarity, std::abs(lambda(i) * slack));
    k.dual_violation = std::max(k.dual_violation, -lambda(i));
    if (lambda(i) > 0.0) k.active_inequalities.push_back(i);
  }
  for (Index i = 0; i < problem.equality.rows(); ++i) {
    k.primal_violation = std::max(
        k.primal_violation, std::abs(problem.equality.row(i).dot(z) - problem.equality_rhs(i)));
  }
  k.objective = objective_value(problem, z);
  return k;
}

Solution solve(const Problem& problem, const Options& options) {
  problem.validate();
  const Index d = problem.dim();
  if (d == 0) throw DimensionError("qp: zero-dimensional problem");
  if (d > options.max_dim) {
    throw DimensionError("qp: dimension " + std::to_string(d) + " exceeds the cap of " +
                         std::to_string(options.max_dim));
  }
  const Index p = problem.inequality.rows();
  const Index q = problem.equality.rows();
  const int max_iter = options.max_iterations > 0
                           ? options.max_iterations
                           : static_cast<int>(100 + 50 * (d + p + q));
  const double tol = options.tolerance;

  // Starting point on the equality manifold.
  Vector z = q > 0 ? min_norm_solve(problem.equality, problem.equality_rhs) : Vector::Zero(d);
  if (q > 0) {
    const double res = (problem.equality * z - problem.equality_rhs).cwiseAbs().maxCoeff();
    if (res > 1e-9 * (1.0 + problem.equality_rhs.cwiseAbs().maxCoeff())) {
      throw InfeasibleError("qp: equality constraints are inconsistent");
    }
  }

  // Phase 1: minimize t^2 over (z, t) with G z + t >= h, t >= 0, E z = f.
  double t0 = 0.0;
  if (p > 0) t0 = std::max(0.0, (problem.inequality_rhs - problem.inequality * z).maxCoeff());
  int iterations = 0;
  if (t0 > 0.0) {
    Engine ph;
    ph.H = Matrix::Zero(d + 1, d + 1);
    ph.H(d, d) = 2.0;
    ph.g = Vector::Zero(d + 1);
    ph.n_eq = q;
    ph.C = Matrix::Zero(q + p + 1, d + 1);
    ph.r = Vector::Zero(q + p + 1);
    if (q > 0) {
      ph.C.topLeftCorner(q, d) = problem.equality;
      ph.r.head(q) = problem.equality_rhs;
    }
    ph.C.block(q, 0, p, d) = problem.inequality;
    ph.C.block(q, d, p, 1).setOnes();
    ph.r.segment(q, p) = problem.inequality_rhs;
    ph.C(q + p, d) = 1.0;
    Vector start(d + 1);
    start << z, t0;
    std::vector<Index> w0;
    for (Index i = 0; i < q; ++i) w0.push_back(i);
    const EngineResult r1 = run_active_set(ph, start, w0, max_iter, tol);
    iterations += r1.iterations;
    const double scale = 1.0 + problem.inequality_rhs.cwiseAbs().maxCoeff();
    if (r1.z(d) > 1e-9 * scale) {
      throw InfeasibleError("qp: constraints are infeasible (phase-1 residual " +
                            std::to_string(r1.z(d)) + ")");
    }
    z = r1.z.head(d);
  }

  // Phase 2.
  Engine e;
  e.H = 2.0 * (problem.objective.transpose() * problem.objective);
  e.H.diagonal().array() += 2.0 * problem.ridge;
  e.g = -2.0 * (problem.objective.transpose() * problem.target);
  e.n_eq = q;
  e.C.resize(q + p, d);
  e.r.resize(q + p);
  if (q > 0) {
    e.C.topRows(q) = problem.equality;
    e.r.head(q) = problem.equality_rhs;
  }
  if (p > 0) {
    e.C.bottomRows(p) = problem.inequality;
    e.r.tail(p) = problem.inequality_rhs;
  }
  std::vector<Index> w0;
  for (Index i = 0; i < q; ++i) w0.push_back(i);
  EngineResult r2 = run_active_set(e, z, w0, max_iter, tol);
  iterations += r2.iterations;

  Solution sol;
  sol.z = std::move(r2.z);
  sol.equality_multipliers = r2.multipliers.head(q);
  sol.inequality_multipliers = r2.multipliers.tail(p);
  sol.kkt = kkt_report(problem, sol.z, sol.inequality_multipliers, sol.equality_multipliers);
  sol.kkt.iterations = iterations;
  return sol;
}

Problem simplex_problem(Matrix objective, Vector target) {
  const Index k = objective.cols();
  Problem prob;
  prob.objective = std::move(objective);
  prob.target = std::move(target);
  prob.inequality = Matrix::Identity(k, k);
  prob.inequality_rhs = Vector::Zero(k);
  prob.equality = Matrix::Ones(1, k);
  prob.equality_rhs = Vector::Ones(1);
  return prob;
}

Solution solve_simplex_ls(const Matrix& predictions, const Vector& y, const Options& options) {
  if (predictions.cols() < 1) throw DimensionError("simplex least squares needs K >= 1");
  if (predictions.cols() == 1) {
    Problem prob = simplex_problem(predictions, y);
    prob.validate();
    Solution sol;
    sol.z = Vector::Ones(1);
    // Stationarity: grad = nu (lambda = 0).
    const Vector grad = 2.0 * (predictions.transpose() * (predictions * sol.z - y));
    sol.inequality_multipliers = Vector::Zero(1);
    sol.equality_multipliers = grad;
    sol.kkt = kkt_report(prob, sol.z, sol.inequality_multipliers, sol.equality_multipliers);
    return sol;
  }
  return solve(simplex_problem(predictions, y), options);
}

}  // namespace msda::qp
