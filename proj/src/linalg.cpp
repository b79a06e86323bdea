#include "tfdiag/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tfdiag::linalg {

namespace {

void check_symmetric(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(what) + ": matrix must be square");
  }
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymCheckTol * scale) {
    throw std::invalid_argument(std::string(what) +
                                ": matrix is not symmetric (max asymmetry " +
                                std::to_string(asym) + ")");
  }
}

}  // namespace

void check_finite(const Eigen::Ref<const Eigen::MatrixXd>& m,
                  const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) +
                                ": matrix contains NaN or infinite entries");
  }
}

Eigen::MatrixXd centering_matrix(Eigen::Index n) {
  if (n < 1) {
    throw std::invalid_argument("centering_matrix: n must be >= 1");
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Constant(n, n, -1.0 / double(n));
  h.diagonal().array() += 1.0;
  return h;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  double best_abs = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > best_abs) {
      best_abs = a;
      best = i;
    }
  }
  if (v[best] < 0.0) {
    v = -v;
  }
}

std::vector<EigenPair> sym_eig(const Eigen::MatrixXd& S, int k,
                               EigOrder order) {
  check_finite(S, "sym_eig");
  check_symmetric(S, "sym_eig");
  const Eigen::Index n = S.rows();
  if (k < 1 || k > n) {
    throw std::invalid_argument("sym_eig: k out of range [1, " +
                                std::to_string(n) + "]");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      0.5 * (S + S.transpose()));
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("sym_eig: eigendecomposition failed to converge");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (order == EigOrder::Largest) {
    // stable: equal eigenvalues keep ascending original index
    std::stable_sort(idx.begin(), idx.end(),
                     [&](Eigen::Index a, Eigen::Index b) {
                       return values[a] > values[b];
                     });
  }

  std::vector<EigenPair> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    EigenPair p;
    p.value = values[idx[static_cast<std::size_t>(i)]];
    p.vector = solver.eigenvectors().col(idx[static_cast<std::size_t>(i)]);
    fix_sign(p.vector);
    out.push_back(std::move(p));
  }
  return out;
}

GenEigResult gen_eig(const Eigen::MatrixXd& L, const Eigen::MatrixXd& R,
                     int k) {
  check_finite(L, "gen_eig (L)");
  check_finite(R, "gen_eig (R)");
  if (L.rows() != R.rows() || L.cols() != R.cols()) {
    throw std::invalid_argument("gen_eig: L and R dimensions differ");
  }
  check_symmetric(L, "gen_eig (L)");
  check_symmetric(R, "gen_eig (R)");
  const Eigen::Index d = L.rows();
  if (k < 1 || k > d) {
    throw std::invalid_argument("gen_eig: k out of range [1, " +
                                std::to_string(d) + "]");
  }

  Eigen::MatrixXd r = 0.5 * (R + R.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) {
    // rank-deficient R: retry once with diagonal jitter
    r.diagonal().array() += kJitterEps * r.trace() / double(d);
    llt.compute(r);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument(
          "gen_eig: R is indefinite beyond jitter tolerance");
    }
  }

  // reduce to a standard symmetric problem: C = G^-1 L G^-T with R = G G^T
  const Eigen::MatrixXd g = llt.matrixL();
  Eigen::MatrixXd w =
      g.triangularView<Eigen::Lower>().solve(0.5 * (L + L.transpose()));
  Eigen::MatrixXd c =
      g.triangularView<Eigen::Lower>().solve(w.transpose()).transpose();

  std::vector<EigenPair> pairs = sym_eig(c, k, EigOrder::Smallest);

  GenEigResult res;
  res.vectors.resize(d, k);
  res.values.resize(k);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd a = g.transpose()
                            .triangularView<Eigen::Upper>()
                            .solve(pairs[static_cast<std::size_t>(i)].vector);
    fix_sign(a);
    res.vectors.col(i) = a;
    res.values[i] = pairs[static_cast<std::size_t>(i)].value;
  }
  return res;
}

PcaResult pca_embed(const Eigen::MatrixXd& X_D, int k) {
  check_finite(X_D, "pca_embed");
  const Eigen::Index d = X_D.rows();
  const Eigen::Index n = X_D.cols();
  if (k < 1 || k > std::min(d, n)) {
    throw std::invalid_argument("pca_embed: k out of range [1, min(d, n) = " +
                                std::to_string(std::min(d, n)) + "]");
  }

  const Eigen::VectorXd mean = X_D.rowwise().mean();
  PcaResult res;
  if (d <= n) {
    const Eigen::MatrixXd xc = X_D.colwise() - mean;
    const Eigen::MatrixXd scatter = xc * xc.transpose();
    std::vector<EigenPair> pairs = sym_eig(scatter, k, EigOrder::Largest);
    res.basis.resize(d, k);
    for (int i = 0; i < k; ++i) {
      res.basis.col(i) = pairs[static_cast<std::size_t>(i)].vector;
    }
  } else {
    // Gram dual: eigenvectors of Xc^T Xc map to Xc u / sqrt(lambda)
    const Eigen::MatrixXd xc = X_D.colwise() - mean;
    const Eigen::MatrixXd gram = xc.transpose() * xc;
    std::vector<EigenPair> pairs = sym_eig(gram, k, EigOrder::Largest);
    const double lambda_max = std::max(pairs.front().value, 1.0);
    res.basis.resize(d, k);
    for (int i = 0; i < k; ++i) {
      const double lambda = pairs[static_cast<std::size_t>(i)].value;
      if (lambda <= 1e-12 * lambda_max) {
        throw std::invalid_argument(
            "pca_embed: k exceeds the rank of the centered data (component " +
            std::to_string(i) + " has negligible variance)");
      }
      Eigen::VectorXd b =
          xc * pairs[static_cast<std::size_t>(i)].vector / std::sqrt(lambda);
      fix_sign(b);
      res.basis.col(i) = b;
    }
  }
  res.projected = res.basis.transpose() * X_D;
  return res;
}

}  // namespace tfdiag::linalg
