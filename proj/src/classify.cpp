#include "tfdiag/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "tfdiag/linalg.hpp"

namespace tfdiag::classify {

namespace {

// Squared distances, refs x queries: d2(i,j) = |r_i|^2 + |q_j|^2 - 2 r_i.q_j
Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& refs,
                                  const Eigen::MatrixXd& queries) {
  Eigen::MatrixXd d2 = -2.0 * refs.transpose() * queries;
  d2.colwise() += refs.colwise().squaredNorm().transpose();
  d2.rowwise() += queries.colwise().squaredNorm();
  return d2.cwiseMax(0.0);
}

void check_query_dim(const NnModel& model, const Eigen::MatrixXd& queries,
                     const char* what) {
  if (queries.rows() != model.points.rows()) {
    throw std::invalid_argument(
        std::string(what) + ": query dimension " +
        std::to_string(queries.rows()) + " does not match model dimension " +
        std::to_string(model.points.rows()));
  }
}

}  // namespace

NnModel nn_fit(const Eigen::MatrixXd& points,
               const std::vector<FaultClass>& labels) {
  if (points.cols() < 1) {
    throw std::invalid_argument("nn_fit: need at least one reference point");
  }
  if (static_cast<std::size_t>(points.cols()) != labels.size()) {
    throw std::invalid_argument(
        "nn_fit: " + std::to_string(points.cols()) + " points but " +
        std::to_string(labels.size()) + " labels");
  }
  linalg::check_finite(points, "nn_fit");
  return NnModel{points, labels};
}

std::vector<FaultClass> nn_predict(const NnModel& model,
                                   const Eigen::MatrixXd& queries) {
  check_query_dim(model, queries, "nn_predict");
  const Eigen::MatrixXd d2 = squared_distances(model.points, queries);
  std::vector<FaultClass> out(static_cast<std::size_t>(queries.cols()));
  for (Eigen::Index j = 0; j < queries.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < d2.rows(); ++i) {
      if (d2(i, j) < d2(best, j)) {  // strict: ties keep the lowest index
        best = i;
      }
    }
    out[static_cast<std::size_t>(j)] =
        model.labels[static_cast<std::size_t>(best)];
  }
  return out;
}

Eigen::VectorXd nn_scores(const NnModel& model, const Eigen::MatrixXd& queries,
                          FaultClass c) {
  check_query_dim(model, queries, "nn_scores");
  const bool has_c = std::any_of(model.labels.begin(), model.labels.end(),
                                 [&](FaultClass l) { return l == c; });
  if (!has_c) {
    throw std::invalid_argument("nn_scores: class " +
                                std::string(to_string(c)) +
                                " is absent from the model");
  }
  const bool has_other = std::any_of(model.labels.begin(), model.labels.end(),
                                     [&](FaultClass l) { return l != c; });
  if (!has_other) {
    throw std::invalid_argument(
        "nn_scores: model contains only class " + std::string(to_string(c)) +
        "; no rest-class distance is defined");
  }

  const Eigen::MatrixXd d2 = squared_distances(model.points, queries);
  Eigen::VectorXd scores(queries.cols());
  for (Eigen::Index j = 0; j < queries.cols(); ++j) {
    double best_c = std::numeric_limits<double>::infinity();
    double best_other = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < d2.rows(); ++i) {
      double& slot =
          model.labels[static_cast<std::size_t>(i)] == c ? best_c : best_other;
      slot = std::min(slot, d2(i, j));
    }
    scores[j] = std::sqrt(best_other) - std::sqrt(best_c);
  }
  return scores;
}

double accuracy(const std::vector<FaultClass>& predicted,
                const std::vector<FaultClass>& truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("accuracy: length mismatch");
  }
  if (predicted.empty()) {
    throw std::invalid_argument("accuracy: empty label vectors");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hits += predicted[i] == truth[i];
  }
  return double(hits) / double(truth.size());
}

Eigen::MatrixXi confusion(const std::vector<FaultClass>& predicted,
                          const std::vector<FaultClass>& truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("confusion: length mismatch");
  }
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(kNumFaultClasses, kNumFaultClasses);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    m(static_cast<int>(truth[i]), static_cast<int>(predicted[i])) += 1;
  }
  return m;
}

RocCurve roc_curve(const Eigen::VectorXd& scores,
                   const std::vector<bool>& truth) {
  if (static_cast<std::size_t>(scores.size()) != truth.size()) {
    throw std::invalid_argument("roc_curve: length mismatch");
  }
  const auto n_pos =
      static_cast<std::size_t>(std::count(truth.begin(), truth.end(), true));
  const std::size_t n_neg = truth.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument(
        "roc_curve: need at least one positive and one negative label");
  }

  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] >
           scores[static_cast<Eigen::Index>(b)];
  });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[static_cast<Eigen::Index>(order[i])];
    // everything tied at this threshold enters the positive side together
    while (i < order.size() &&
           scores[static_cast<Eigen::Index>(order[i])] == s) {
      if (truth[order[i]]) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    curve.points.emplace_back(double(fp) / double(n_neg),
                              double(tp) / double(n_pos));
  }

  double auc = 0.0;
  for (std::size_t p = 1; p < curve.points.size(); ++p) {
    const auto& [x0, y0] = curve.points[p - 1];
    const auto& [x1, y1] = curve.points[p];
    auc += (x1 - x0) * (y0 + y1) / 2.0;
  }
  curve.auc = auc;
  return curve;
}

}  // namespace tfdiag::classify
