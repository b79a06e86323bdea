#ifndef TFDIAG_CLASSIFY_HPP_
#define TFDIAG_CLASSIFY_HPP_

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "tfdiag/domain.hpp"

namespace tfdiag::classify {

// Exact brute-force 1-NN. Reference points are stored verbatim, one sample
// per column; immutable after fit.
struct NnModel {
  Eigen::MatrixXd points;  // k x n
  std::vector<FaultClass> labels;
};

NnModel nn_fit(const Eigen::MatrixXd& points,
               const std::vector<FaultClass>& labels);

/// Assigns each query (one per column) the label of its Euclidean-nearest
/// reference; ties go to the lowest reference index.
std::vector<FaultClass> nn_predict(const NnModel& model,
                                   const Eigen::MatrixXd& queries);

/// Per-query score for class c: distance to the nearest non-c reference
/// minus distance to the nearest c reference. Higher means more c-like.
Eigen::VectorXd nn_scores(const NnModel& model, const Eigen::MatrixXd& queries,
                          FaultClass c);

double accuracy(const std::vector<FaultClass>& predicted,
                const std::vector<FaultClass>& truth);

/// 4x4 count matrix; rows index the true class, columns the predicted one.
Eigen::MatrixXi confusion(const std::vector<FaultClass>& predicted,
                          const std::vector<FaultClass>& truth);

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr), (0,0)..(1,1)
  double auc = 0.0;
};

/// Threshold sweep over all distinct scores (ties grouped), AUC by the
/// trapezoid rule. Requires at least one positive and one negative label.
RocCurve roc_curve(const Eigen::VectorXd& scores,
                   const std::vector<bool>& truth);

}  // namespace tfdiag::classify

#endif  // TFDIAG_CLASSIFY_HPP_
