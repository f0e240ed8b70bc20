#pragma once

#include <vector>

#include "msda/data.hpp"

namespace msda::qp {

/// minimize ||A z - b||^2 + ridge ||z||^2
/// subject to G z >= h and E z = f.
/// Empty G / E (zero rows) mean "no constraints of that kind".
struct Problem {
  Matrix objective;  // A, m x d
  Vector target;     // b, m
  Matrix inequality = Matrix(0, 0);  // G, p x d
  Vector inequality_rhs = Vector(0);
  Matrix equality = Matrix(0, 0);  // E, q x d
  Vector equality_rhs = Vector(0);
  double ridge = 0.0;

  Index dim() const { return objective.cols(); }
  /// Throws DimensionError when blocks disagree.
  void validate() const;
};

struct Options {
  Index max_dim = 64;
  /// 0 selects 100 + 50 * (d + number of constraints).
  int max_iterations = 0;
  double tolerance = 1e-10;
};

struct KktReport {
  double stationarity = 0.0;      // ||grad f - G^T lambda - E^T nu||_inf
  double primal_violation = 0.0;  // max(max(h - G z, 0), |E z - f|)
  double complementarity = 0.0;   // max |lambda_i (G_i z - h_i)|
  double dual_violation = 0.0;    // max(0, -min lambda)
  double objective = 0.0;
  int iterations = 0;
  std::vector<Index> active_inequalities;

  double max_residual() const;
};

struct Solution {
  Vector z;
  Vector inequality_multipliers;
  Vector equality_multipliers;
  KktReport kkt;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class UnboundedError : public Error {
 public:
  using Error::Error;
};

/// Raised when the active-set loop does not terminate; carries the last iterate.
class IterationLimitError : public Error {
 public:
  IterationLimitError(const std::string& what, Vector best) : Error(what), best_(std::move(best)) {}
  const Vector& best() const { return best_; }

 private:
  Vector best_;
};

double objective_value(const Problem& problem, const Vector& z);

/// Compute stationarity, feasibility and complementarity for a candidate
/// point and multipliers.
KktReport kkt_report(const Problem& problem, const Vector& z, const Vector& inequality_multipliers,
                     const Vector& equality_multipliers);

/// Primal active-set method on the normal equations with a phase-1 start.
/// Deterministic: among equally blocking or equally violated constraints the
/// lowest index wins.
Solution solve(const Problem& problem, const Options& options = {});

/// argmin over the probability simplex of ||P w - y||^2.
Solution solve_simplex_ls(const Matrix& predictions, const Vector& y, const Options& options = {});

/// Convenience builder for the simplex constraints (w >= 0, sum w = 1).
Problem simplex_problem(Matrix objective, Vector target);

}  // namespace msda::qp
