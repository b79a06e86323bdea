#include "tfdiag/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "tfdiag/classify.hpp"

namespace tfdiag::adapt {

void AdaptationParams::validate() const {
  if (k < 1) {
    throw std::invalid_argument("AdaptationParams: k must be > 0");
  }
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument(
        "AdaptationParams: lambda must lie strictly in (0, 1); the "
        "optimization problem is ill-defined at the endpoints");
  }
  if (iterations < 1) {
    throw std::invalid_argument("AdaptationParams: iterations must be >= 1");
  }
  if (pca_dim < 1) {
    throw std::invalid_argument("AdaptationParams: pca_dim must be > 0");
  }
  if (k > pca_dim) {
    throw std::invalid_argument("AdaptationParams: k must be <= pca_dim");
  }
}

MmdMatrix mmd_marginal_matrix(int n_tr, int n_te) {
  if (n_tr < 1 || n_te < 1) {
    throw std::invalid_argument(
        "mmd_marginal_matrix: sample counts must be positive");
  }
  const int n = n_tr + n_te;
  Eigen::VectorXd v(n);
  v.head(n_tr).setConstant(1.0 / double(n_tr));
  v.tail(n_te).setConstant(-1.0 / double(n_te));

  MmdMatrix m;
  m.M = v * v.transpose();
  m.kind = MmdKind::Marginal;
  return m;
}

MmdMatrix mmd_conditional_matrix(const std::vector<FaultClass>& y_tr,
                                 const std::vector<FaultClass>& y_te_pseudo,
                                 FaultClass c, CrossTermNorm norm) {
  if (y_tr.empty() || y_te_pseudo.empty()) {
    throw std::invalid_argument(
        "mmd_conditional_matrix: label vectors must be nonempty");
  }
  const auto n_tr = static_cast<int>(y_tr.size());
  const auto n_te = static_cast<int>(y_te_pseudo.size());
  const auto n_tr_c =
      static_cast<int>(std::count(y_tr.begin(), y_tr.end(), c));
  const auto n_te_c = static_cast<int>(
      std::count(y_te_pseudo.begin(), y_te_pseudo.end(), c));
  if (n_tr_c == 0) {
    throw std::invalid_argument("mmd_conditional_matrix: class " +
                                std::string(to_string(c)) +
                                " is absent from the training labels");
  }

  MmdMatrix m;
  m.kind = MmdKind::Conditional;
  m.cls = c;
  const int n = n_tr + n_te;
  if (n_te_c == 0) {
    m.M = Eigen::MatrixXd::Zero(n, n);
    m.skipped = true;
    return m;
  }

  if (norm == CrossTermNorm::ClassCounts) {
    // rank-1 form; PSD and zero row sums by construction
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n_tr; ++i) {
      if (y_tr[static_cast<std::size_t>(i)] == c) {
        v[i] = 1.0 / double(n_tr_c);
      }
    }
    for (int j = 0; j < n_te; ++j) {
      if (y_te_pseudo[static_cast<std::size_t>(j)] == c) {
        v[n_tr + j] = -1.0 / double(n_te_c);
      }
    }
    m.M = v * v.transpose();
  } else {
    // literal printed cross term -1/(n_tr n_te); kept for comparison runs
    m.M = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n_tr; ++i) {
      if (y_tr[static_cast<std::size_t>(i)] != c) continue;
      for (int j = 0; j < n_tr; ++j) {
        if (y_tr[static_cast<std::size_t>(j)] == c) {
          m.M(i, j) = 1.0 / (double(n_tr_c) * double(n_tr_c));
        }
      }
      for (int j = 0; j < n_te; ++j) {
        if (y_te_pseudo[static_cast<std::size_t>(j)] == c) {
          m.M(i, n_tr + j) = -1.0 / (double(n_tr) * double(n_te));
          m.M(n_tr + j, i) = -1.0 / (double(n_tr) * double(n_te));
        }
      }
    }
    for (int i = 0; i < n_te; ++i) {
      if (y_te_pseudo[static_cast<std::size_t>(i)] != c) continue;
      for (int j = 0; j < n_te; ++j) {
        if (y_te_pseudo[static_cast<std::size_t>(j)] == c) {
          m.M(n_tr + i, n_tr + j) = 1.0 / (double(n_te_c) * double(n_te_c));
        }
      }
    }
  }
  return m;
}

Eigen::MatrixXd joint_mmd_sum(
    const std::vector<FaultClass>& y_tr,
    const std::optional<std::vector<FaultClass>>& y_te_pseudo, int n_te) {
  if (y_tr.empty()) {
    throw std::invalid_argument("joint_mmd_sum: y_tr must be nonempty");
  }
  if (n_te < 1) {
    throw std::invalid_argument("joint_mmd_sum: n_te must be positive");
  }
  if (y_te_pseudo && static_cast<int>(y_te_pseudo->size()) != n_te) {
    throw std::invalid_argument(
        "joint_mmd_sum: pseudo-label count " +
        std::to_string(y_te_pseudo->size()) +
        " does not match the test domain size " + std::to_string(n_te));
  }

  const auto n_tr = static_cast<int>(y_tr.size());
  Eigen::MatrixXd sum = mmd_marginal_matrix(n_tr, n_te).M;
  if (y_te_pseudo) {
    for (FaultClass c : kAllFaultClasses) {
      if (std::find(y_tr.begin(), y_tr.end(), c) == y_tr.end()) {
        continue;
      }
      sum += mmd_conditional_matrix(y_tr, *y_te_pseudo, c).M;
    }
  }
  return sum;
}

double mmd_distance(const Eigen::MatrixXd& V_s, const Eigen::MatrixXd& V_t) {
  if (V_s.rows() != V_t.rows()) {
    throw std::invalid_argument("mmd_distance: row counts differ");
  }
  if (V_s.cols() < 1 || V_t.cols() < 1) {
    throw std::invalid_argument("mmd_distance: empty input");
  }
  return (V_s.rowwise().mean() - V_t.rowwise().mean()).squaredNorm();
}

linalg::GenEigResult solve_adaptation(const Eigen::MatrixXd& X_D,
                                      const Eigen::MatrixXd& M_sum,
                                      double lambda, int k) {
  const Eigen::Index d = X_D.rows();
  const Eigen::Index n = X_D.cols();
  if (M_sum.rows() != n || M_sum.cols() != n) {
    throw std::invalid_argument("solve_adaptation: M_sum must be " +
                                std::to_string(n) + "x" + std::to_string(n));
  }
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument(
        "solve_adaptation: lambda must lie strictly in (0, 1)");
  }
  if (k < 1 || k > d) {
    throw std::invalid_argument("solve_adaptation: k out of range");
  }

  Eigen::MatrixXd lhs = (1.0 - lambda) * (X_D * M_sum * X_D.transpose());
  lhs = 0.5 * (lhs + lhs.transpose());
  lhs.diagonal().array() += lambda;

  const Eigen::MatrixXd xc = X_D.colwise() - X_D.rowwise().mean().eval();
  const Eigen::MatrixXd rhs = xc * xc.transpose();  // X_D H X_D^T

  return linalg::gen_eig(lhs, rhs, k);
}

Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd out = X;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) {
      out.row(i) /= norm;
    }
  }
  return out;
}

std::pair<std::vector<FaultClass>, AdaptationModel> datf_fit_predict(
    const ingest::DomainDataset& train, const ingest::DomainDataset& test,
    const AdaptationParams& params, const FitOptions& options,
    const PseudoLabeler& labeler) {
  params.validate();
  if (!train.y) {
    throw std::invalid_argument("datf_fit_predict: training labels required");
  }
  if (train.X.cols() != test.X.cols()) {
    throw std::invalid_argument(
        "datf_fit_predict: feature dimensions differ (" +
        std::to_string(train.X.cols()) + " vs " +
        std::to_string(test.X.cols()) + ")");
  }
  if (static_cast<Eigen::Index>(train.y->size()) != train.X.rows()) {
    throw std::invalid_argument(
        "datf_fit_predict: label count does not match training rows");
  }

  const auto n_tr = train.X.rows();
  const auto n_te = test.X.rows();
  const std::vector<FaultClass>& y_tr = *train.y;

  const PseudoLabeler predict =
      labeler ? labeler
              : [](const Eigen::MatrixXd& refs,
                   const std::vector<FaultClass>& labels,
                   const Eigen::MatrixXd& queries) {
                  return classify::nn_predict(classify::nn_fit(refs, labels),
                                              queries);
                };

  // d x n combined matrix of row-normalized samples, training columns first
  Eigen::MatrixXd x_d(train.X.cols(), n_tr + n_te);
  x_d.leftCols(n_tr) = l2_normalize_rows(train.X).transpose();
  x_d.rightCols(n_te) = l2_normalize_rows(test.X).transpose();

  linalg::PcaResult local_pca;
  const linalg::PcaResult* pca = options.pca;
  if (pca == nullptr) {
    local_pca = linalg::pca_embed(x_d, params.pca_dim);
    pca = &local_pca;
  } else if (pca->basis.rows() != x_d.rows() ||
             pca->basis.cols() != params.pca_dim) {
    throw std::invalid_argument(
        "datf_fit_predict: supplied PCA basis has the wrong shape");
  }
  const Eigen::MatrixXd x_p = pca->basis.transpose() * x_d;  // pca_dim x n

  AdaptationModel model;
  model.params = params;

  std::vector<FaultClass> pseudo;
  Eigen::MatrixXd a_reduced;
  for (int it = 0; it <= params.iterations; ++it) {
    const Eigen::MatrixXd m_sum =
        it == 0 ? mmd_marginal_matrix(static_cast<int>(n_tr),
                                      static_cast<int>(n_te))
                      .M
                : joint_mmd_sum(y_tr, pseudo, static_cast<int>(n_te));
    const linalg::GenEigResult sol =
        solve_adaptation(x_p, m_sum, params.lambda, params.k);
    a_reduced = sol.vectors;

    const Eigen::MatrixXd v = a_reduced.transpose() * x_p;
    const Eigen::MatrixXd v_tr = v.leftCols(n_tr);
    const Eigen::MatrixXd v_te = v.rightCols(n_te);
    pseudo = predict(v_tr, y_tr, v_te);

    model.history.push_back({pseudo, mmd_distance(v_tr, v_te)});
    if (std::find(options.record_projection_iterations.begin(),
                  options.record_projection_iterations.end(),
                  it) != options.record_projection_iterations.end()) {
      model.recorded_projections.emplace(it, std::make_pair(v_tr, v_te));
    }
    if (it == params.iterations) {
      model.V_tr = v_tr;
      model.V_te = v_te;
    }
  }

  model.A = pca->basis * a_reduced;
  return {pseudo, model};
}

nlohmann::ordered_json model_to_json(const AdaptationModel& model) {
  nlohmann::ordered_json j;
  j["params"] = {{"k", model.params.k},
                 {"lambda", model.params.lambda},
                 {"iterations", model.params.iterations},
                 {"pca_dim", model.params.pca_dim}};
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < model.A.rows(); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < model.A.cols(); ++c) {
      row.push_back(model.A(r, c));
    }
    rows.push_back(std::move(row));
  }
  j["A"] = std::move(rows);
  nlohmann::ordered_json hist = nlohmann::ordered_json::array();
  for (const auto& rec : model.history) {
    nlohmann::ordered_json labels = nlohmann::ordered_json::array();
    for (FaultClass c : rec.pseudo_labels) {
      labels.push_back(std::string(to_string(c)));
    }
    hist.push_back({{"marginal_mmd", rec.marginal_mmd},
                    {"pseudo_labels", std::move(labels)}});
  }
  j["history"] = std::move(hist);
  return j;
}

SubspaceAlignResult subspace_align(const ingest::DomainDataset& train,
                                   const ingest::DomainDataset& test, int k) {
  if (train.X.cols() != test.X.cols()) {
    throw std::invalid_argument("subspace_align: feature dimensions differ");
  }
  const Eigen::Index limit =
      std::min({train.X.cols(), train.X.rows(), test.X.rows()});
  if (k < 1 || k > limit) {
    throw std::invalid_argument("subspace_align: k out of range [1, " +
                                std::to_string(limit) + "]");
  }

  const linalg::PcaResult pca_s = linalg::pca_embed(train.X.transpose(), k);
  const linalg::PcaResult pca_t = linalg::pca_embed(test.X.transpose(), k);

  SubspaceAlignResult res;
  res.alignment = pca_s.basis.transpose() * pca_t.basis;
  res.projected_train = train.X * pca_s.basis * res.alignment;
  res.projected_test = test.X * pca_t.basis;
  return res;
}

}  // namespace tfdiag::adapt
