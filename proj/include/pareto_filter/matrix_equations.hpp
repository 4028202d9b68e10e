#pragma once

#include <Eigen/Dense>

#include "pareto_filter/errors.hpp"

namespace pareto_filter {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Iteration controls shared by the fixed-point Riccati solvers.
struct SolverTolerances {
  double residual_tol = 1e-12;  // relative to max(1, ||rhs||_F)
  int max_iterations = 10000;

  void validate() const {
    if (!(residual_tol > 0.0)) throw ValidationError("residual_tol must be > 0");
    if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
  }
};

// Spectral radii below 1 - kStabilityMargin count as Schur stable. The margin
// keeps the Lyapunov solvers away from numerically singular systems.
inline constexpr double kStabilityMargin = 1e-9;

/// Largest eigenvalue magnitude of a square matrix.
double spectral_radius(const MatrixXd& A);

inline MatrixXd symmetrize(const MatrixXd& X) { return 0.5 * (X + X.transpose()); }

bool is_symmetric(const MatrixXd& X, double tol = 1e-10);

/// Cholesky-based positive definiteness test (pivot tolerance 1e-12).
bool is_positive_definite(const MatrixXd& X);

/// Minimum eigenvalue of the symmetric part; >= -tol means PSD in tests.
double min_symmetric_eigenvalue(const MatrixXd& X);

bool is_positive_semidefinite(const MatrixXd& X, double tol = 1e-9);

/// Kronecker product, dense. Row/col blocks ordered as vec conventions require.
MatrixXd kronecker(const MatrixXd& A, const MatrixXd& B);

// Solves X = A X A^T + Q for symmetric Q and Schur-stable A by dense
// vectorization: (I - A (x) A) vec(X) = vec(Q). The result is symmetrized.
MatrixXd solve_discrete_lyapunov(const MatrixXd& A, const MatrixXd& Q,
                                 const SolverTolerances& tol = {});

// Solves M = A^T M A + W. W may be non-symmetric; the solution is
// symmetrized only when W is symmetric.
MatrixXd solve_dual_lyapunov(const MatrixXd& A, const MatrixXd& W,
                             const SolverTolerances& tol = {});

// Solves X = A X A^T - A X C^T (C X C^T + I + lambda R)^{-1} C X A^T + lambda Q
// by fixed-point iteration from X0 = lambda Q. Returns the zero matrix for
// lambda = 0. R must be positive definite.
MatrixXd solve_filter_riccati(const MatrixXd& A, const MatrixXd& C,
                              const MatrixXd& Q, const MatrixXd& R,
                              double lambda, const SolverTolerances& tol = {});

// Solves the one-step-prediction Riccati equation
//   S = A S A^T - A S C^T (C S C^T + R)^{-1} C S A^T + Q
// by fixed-point iteration from S0 = Q. Requires (A, C) detectable; A itself
// need not be stable.
MatrixXd solve_prediction_riccati(const MatrixXd& A, const MatrixXd& C,
                                  const MatrixXd& Q, const MatrixXd& R,
                                  const SolverTolerances& tol = {});

struct LqrSolution {
  MatrixXd X;  // cost-to-go matrix, PSD
  MatrixXd L;  // state-feedback gain, rho(A - B L) < 1
};

// Solves X = A^T X A - A^T X B (B^T X B + Wu)^{-1} B^T X A + Wx and returns
// the associated feedback gain L = (B^T X B + Wu)^{-1} B^T X A.
LqrSolution solve_lqr_riccati(const MatrixXd& A, const MatrixXd& B,
                              const MatrixXd& Wx, const MatrixXd& Wu,
                              const SolverTolerances& tol = {});

}  // namespace pareto_filter
