#include "pareto_filter/matrix_equations.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <string>

namespace pareto_filter {

namespace {

void require_square(const MatrixXd& A, const char* name) {
  if (A.rows() != A.cols())
    throw DimensionError(std::string(name) + " must be square, got " +
                         std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
}

void require_same_size(const MatrixXd& A, const MatrixXd& B, const char* a, const char* b) {
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw DimensionError(std::string(a) + " and " + b + " must have equal size");
}

void require_stable(const MatrixXd& A, const char* context) {
  const double rho = spectral_radius(A);
  if (rho >= 1.0 - kStabilityMargin)
    throw InstabilityError(std::string(context) + ": spectral radius " +
                           std::to_string(rho) + " is not < 1");
}

}  // namespace

double spectral_radius(const MatrixXd& A) {
  require_square(A, "A");
  if (!A.allFinite()) throw ValidationError("spectral_radius: non-finite entries");
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_symmetric(const MatrixXd& X, double tol) {
  if (X.rows() != X.cols()) return false;
  return (X - X.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, X.cwiseAbs().maxCoeff());
}

bool is_positive_definite(const MatrixXd& X) {
  if (X.rows() != X.cols() || X.rows() == 0) return false;
  const Eigen::Index n = X.rows();
  const double scale = X.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return false;
  MatrixXd L = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = X(j, j) - L.row(j).head(j).squaredNorm();
    if (d <= 1e-12 * scale) return false;
    L(j, j) = std::sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      L(i, j) = (X(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }
  }
  return true;
}

double min_symmetric_eigenvalue(const MatrixXd& X) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(X));
  return es.eigenvalues().minCoeff();
}

bool is_positive_semidefinite(const MatrixXd& X, double tol) {
  if (!is_symmetric(X, 1e-8)) return false;
  return min_symmetric_eigenvalue(X) >= -tol * std::max(1.0, X.cwiseAbs().maxCoeff());
}

MatrixXd kronecker(const MatrixXd& A, const MatrixXd& B) {
  MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

namespace {

// Shared core: solves X = op(A) X op(A)^T + W via vec(X) = (I - A2)^{-1} vec(W)
// with A2 = kron(A, A) for the primal form and kron(A, A)^T for the dual.
MatrixXd lyapunov_vectorized(const MatrixXd& A, const MatrixXd& W, bool dual,
                             const SolverTolerances& tol, const char* context) {
  tol.validate();
  require_square(A, "A");
  require_same_size(A, W, "A", "W");
  if (!A.allFinite() || !W.allFinite())
    throw ValidationError(std::string(context) + ": non-finite entries");
  require_stable(A, context);

  const Eigen::Index n = A.rows();
  MatrixXd system = MatrixXd::Identity(n * n, n * n);
  const MatrixXd AxA = kronecker(A, A);
  if (dual)
    system -= AxA.transpose();
  else
    system -= AxA;

  const VectorXd w = Eigen::Map<const VectorXd>(W.data(), n * n);
  const VectorXd x = system.partialPivLu().solve(w);
  MatrixXd X = Eigen::Map<const MatrixXd>(x.data(), n, n);

  const MatrixXd residual = dual ? MatrixXd(X - A.transpose() * X * A - W)
                                 : MatrixXd(X - A * X * A.transpose() - W);
  // Backward-error bound: near-marginal A inflates ||X|| relative to ||W||.
  const double scale =
      std::max({1.0, W.norm(), X.norm() * (1.0 + A.squaredNorm())});
  if (residual.norm() > tol.residual_tol * scale) {
    char message[160];
    std::snprintf(message, sizeof(message), "%s: residual %.3e exceeds %.3e", context,
                  residual.norm(), tol.residual_tol * scale);
    throw ConvergenceError(message);
  }
  return X;
}

}  // namespace

MatrixXd solve_discrete_lyapunov(const MatrixXd& A, const MatrixXd& Q,
                                 const SolverTolerances& tol) {
  if (Q.rows() != Q.cols() || !is_symmetric(Q))
    throw ValidationError("solve_discrete_lyapunov: Q must be symmetric");
  return symmetrize(lyapunov_vectorized(A, symmetrize(Q), false, tol,
                                        "solve_discrete_lyapunov"));
}

MatrixXd solve_dual_lyapunov(const MatrixXd& A, const MatrixXd& W,
                             const SolverTolerances& tol) {
  MatrixXd M = lyapunov_vectorized(A, W, true, tol, "solve_dual_lyapunov");
  if (is_symmetric(W)) M = symmetrize(M);
  return M;
}

namespace {

// Fixed-point driver for X = A X A^T - A X C^T (C X C^T + V)^{-1} C X A^T + W.
// The iterate-to-iterate difference equals the residual of the previous
// iterate, so convergence is declared on that difference directly.
MatrixXd dare_fixed_point(const MatrixXd& A, const MatrixXd& C, const MatrixXd& W,
                          const MatrixXd& V, MatrixXd X, const SolverTolerances& tol,
                          const char* context) {
  tol.validate();
  const double scale = std::max(1.0, W.norm());
  const double target = tol.residual_tol * scale;

  double best_diff = std::numeric_limits<double>::infinity();
  for (int it = 0; it < tol.max_iterations; ++it) {
    const MatrixXd CXAt = C * X * A.transpose();
    const MatrixXd G = symmetrize(C * X * C.transpose() + V);
    MatrixXd next = A * X * A.transpose() - CXAt.transpose() * G.llt().solve(CXAt) + W;
    next = symmetrize(next);
    const double diff = (next - X).norm();
    X = next;
    if (diff <= target) return X;
    best_diff = std::min(best_diff, diff);
  }
  // Residuals within 100x the requested tolerance still satisfy every
  // documented bound; beyond that the iteration has genuinely failed.
  if (best_diff <= 100.0 * target) return X;
  throw ConvergenceError(std::string(context) + ": no convergence within " +
                         std::to_string(tol.max_iterations) + " iterations");
}

void check_filter_riccati_inputs(const MatrixXd& A, const MatrixXd& C,
                                 const MatrixXd& Q, const MatrixXd& R,
                                 const char* context) {
  require_square(A, "A");
  require_square(Q, "Q");
  require_square(R, "R");
  require_same_size(A, Q, "A", "Q");
  if (C.cols() != A.rows() || C.rows() != R.rows())
    throw DimensionError(std::string(context) + ": C has incompatible dimensions");
  if (!is_symmetric(Q)) throw ValidationError(std::string(context) + ": Q must be symmetric");
  if (!is_symmetric(R)) throw ValidationError(std::string(context) + ": R must be symmetric");
  if (!is_positive_definite(R))
    throw ValidationError(std::string(context) + ": R must be positive definite");
}

}  // namespace

MatrixXd solve_filter_riccati(const MatrixXd& A, const MatrixXd& C,
                              const MatrixXd& Q, const MatrixXd& R,
                              double lambda, const SolverTolerances& tol) {
  check_filter_riccati_inputs(A, C, Q, R, "solve_filter_riccati");
  if (lambda < 0.0) throw ValidationError("solve_filter_riccati: lambda must be >= 0");
  const Eigen::Index n = A.rows(), m = C.rows();
  if (lambda == 0.0) return MatrixXd::Zero(n, n);

  const MatrixXd W = lambda * symmetrize(Q);
  const MatrixXd V = MatrixXd::Identity(m, m) + lambda * symmetrize(R);
  return dare_fixed_point(A, C, W, V, W, tol, "solve_filter_riccati");
}

MatrixXd solve_prediction_riccati(const MatrixXd& A, const MatrixXd& C,
                                  const MatrixXd& Q, const MatrixXd& R,
                                  const SolverTolerances& tol) {
  check_filter_riccati_inputs(A, C, Q, R, "solve_prediction_riccati");
  const MatrixXd W = symmetrize(Q);
  return dare_fixed_point(A, C, W, symmetrize(R), W, tol, "solve_prediction_riccati");
}

LqrSolution solve_lqr_riccati(const MatrixXd& A, const MatrixXd& B,
                              const MatrixXd& Wx, const MatrixXd& Wu,
                              const SolverTolerances& tol) {
  tol.validate();
  require_square(A, "A");
  if (B.rows() != A.rows()) throw DimensionError("solve_lqr_riccati: B row mismatch");
  require_same_size(A, Wx, "A", "Wx");
  if (Wu.rows() != B.cols() || Wu.cols() != B.cols())
    throw DimensionError("solve_lqr_riccati: Wu must be p x p");
  if (!is_positive_definite(Wx)) throw ValidationError("solve_lqr_riccati: Wx must be > 0");
  if (!is_positive_definite(Wu)) throw ValidationError("solve_lqr_riccati: Wu must be > 0");

  // The LQR equation is the dual of the filter form: transposing
  // X = A^T X A - A^T X B (B^T X B + Wu)^{-1} B^T X A + Wx maps it onto the
  // prediction recursion with (A, C, W, V) -> (A^T, B^T, Wx, Wu).
  LqrSolution sol;
  sol.X = dare_fixed_point(A.transpose(), B.transpose(), symmetrize(Wx),
                           symmetrize(Wu), symmetrize(Wx), tol, "solve_lqr_riccati");
  const MatrixXd G = symmetrize(B.transpose() * sol.X * B + Wu);
  sol.L = G.llt().solve(B.transpose() * sol.X * A);
  const double rho = spectral_radius(A - B * sol.L);
  if (rho >= 1.0 - kStabilityMargin)
    throw ConvergenceError("solve_lqr_riccati: closed loop not stable, rho = " +
                           std::to_string(rho));
  return sol;
}

}  // namespace pareto_filter
