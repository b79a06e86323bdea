#ifndef TFDIAG_LINALG_HPP_
#define TFDIAG_LINALG_HPP_

#include <Eigen/Dense>
#include <vector>

namespace tfdiag::linalg {

// Contract tolerances. Property tests assert against these exact values.
inline constexpr double kSymCheckTol = 1e-10;     // allowed input asymmetry
inline constexpr double kEigResidualTol = 1e-8;   // ||S v - lambda v||
inline constexpr double kEigOrthoTol = 1e-8;      // pairwise orthonormality
inline constexpr double kGenResidualTol = 1e-6;   // ||L A - R A diag(l)||_F
inline constexpr double kGenOrthoTol = 1e-6;      // ||A^T R A - I||_F
inline constexpr double kJitterEps = 1e-9;        // jitter = eps*trace(R)/d

/// Throws std::invalid_argument if any entry is NaN or infinite.
void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& m,
                  const char* what);

/// H = I - (1/n) 11^T. Symmetric, idempotent, rows sum to zero.
Eigen::MatrixXd centering_matrix(Eigen::Index n);

struct EigenPair {
  double value = 0.0;
  Eigen::VectorXd vector;  // unit norm, sign-convention applied
};

enum class EigOrder { Largest, Smallest };

/// Deterministic sign convention: flips the vector so that its
/// largest-magnitude component is positive (first such component on ties).
void fix_sign(Eigen::Ref<Eigen::VectorXd> v);

/// Top or bottom k eigenpairs of a symmetric matrix, sorted by eigenvalue
/// in the requested order; ties keep ascending original index. Vectors are
/// unit-norm, mutually orthonormal, and sign-fixed.
std::vector<EigenPair> sym_eig(const Eigen::MatrixXd& S, int k,
                               EigOrder order);

struct GenEigResult {
  Eigen::MatrixXd vectors;  // d x k, R-orthonormal columns
  Eigen::VectorXd values;   // k smallest generalized eigenvalues, ascending
};

/// Solves L a = R a lambda for the k smallest generalized eigenvalues.
/// L must be symmetric, R symmetric positive-semidefinite. A rank-deficient
/// R gets a jitter of kJitterEps*trace(R)/d on the diagonal; if R is
/// indefinite beyond that, throws std::invalid_argument.
GenEigResult gen_eig(const Eigen::MatrixXd& L, const Eigen::MatrixXd& R,
                     int k);

struct PcaResult {
  Eigen::MatrixXd basis;      // d x k, orthonormal columns, sign-fixed
  Eigen::MatrixXd projected;  // k x n, equals basis^T * X_D (uncentered)
};

/// Maximizes tr(A^T X_D H X_D^T A) over orthonormal A, i.e. A spans the
/// top-k eigenvectors of the column-centered scatter of X_D (d x n, one
/// sample per column). Uses the n x n Gram form when d > n.
PcaResult pca_embed(const Eigen::MatrixXd& X_D, int k);

}  // namespace tfdiag::linalg

#endif  // TFDIAG_LINALG_HPP_
