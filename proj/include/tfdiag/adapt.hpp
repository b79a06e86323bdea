#ifndef TFDIAG_ADAPT_HPP_
#define TFDIAG_ADAPT_HPP_

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tfdiag/domain.hpp"
#include "tfdiag/ingest.hpp"
#include "tfdiag/linalg.hpp"

namespace tfdiag::adapt {

struct AdaptationParams {
  int k = 100;           // subspace dimension
  double lambda = 0.1;   // regularization trade-off, strictly in (0, 1)
  int iterations = 10;   // pseudo-label refinement passes
  int pca_dim = 200;     // pre-reduction dimension, >= k

  void validate() const;
};

enum class MmdKind { Marginal, Conditional };

// (n_tr+n_te)^2 coefficient matrix coupling source and target samples.
// Always symmetric PSD with zero row sums.
struct MmdMatrix {
  Eigen::MatrixXd M;
  MmdKind kind = MmdKind::Marginal;
  std::optional<FaultClass> cls;  // set for conditional matrices
  bool skipped = false;           // class absent from the pseudo-labels
};

/// Marginal MMD coefficients: 1/(n_tr^2) within source, 1/(n_te^2) within
/// target, -1/(n_tr n_te) across. Rank 1.
MmdMatrix mmd_marginal_matrix(int n_tr, int n_te);

// Cross-block denominator choice for the conditional matrix. ClassCounts
// (-1/(n_tr^c n_te^c)) preserves the zero-row-sum/PSD identities and is the
// default; GlobalCounts (-1/(n_tr n_te)) reproduces the literal printed
// formula and loses both.
enum class CrossTermNorm { ClassCounts, GlobalCounts };

/// Class-conditional MMD coefficients over the samples labeled (or
/// pseudo-labeled) c. Throws if c is absent from y_tr; returns an all-zero
/// matrix with `skipped` set if c is absent from y_te_pseudo.
MmdMatrix mmd_conditional_matrix(const std::vector<FaultClass>& y_tr,
                                 const std::vector<FaultClass>& y_te_pseudo,
                                 FaultClass c,
                                 CrossTermNorm norm = CrossTermNorm::ClassCounts);

/// M_m plus the per-class conditional matrices for every class present in
/// y_tr (skipped classes contribute zero). Without pseudo-labels this is
/// the marginal matrix alone.
Eigen::MatrixXd joint_mmd_sum(
    const std::vector<FaultClass>& y_tr,
    const std::optional<std::vector<FaultClass>>& y_te_pseudo, int n_te);

/// Squared distance between the column means of the two projections.
double mmd_distance(const Eigen::MatrixXd& V_s, const Eigen::MatrixXd& V_t);

/// The k smallest generalized eigenvectors of (L, R) with
/// L = (1-lambda) X_D M_sum X_D^T + lambda I and R = X_D H X_D^T.
/// Columns satisfy A^T R A = I.
linalg::GenEigResult solve_adaptation(const Eigen::MatrixXd& X_D,
                                      const Eigen::MatrixXd& M_sum,
                                      double lambda, int k);

struct IterationRecord {
  std::vector<FaultClass> pseudo_labels;
  double marginal_mmd = 0.0;
};

// The learned transformation plus iteration history. A maps the
// row-normalized feature space to the adapted subspace; V = A^T X_D
// partitions into V_tr, V_te by column index.
struct AdaptationModel {
  Eigen::MatrixXd A;     // d x k
  Eigen::MatrixXd V_tr;  // k x n_tr
  Eigen::MatrixXd V_te;  // k x n_te
  std::vector<IterationRecord> history;  // entry 0 is the marginal-only solve
  AdaptationParams params;
  // projections retained on request (FitOptions), keyed by iteration
  std::map<int, std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> recorded_projections;
};

// Pseudo-labeling hook; defaults to exact 1-NN on the projected training
// data. Receives (V_tr, y_tr, V_te) and returns one label per test column.
using PseudoLabeler = std::function<std::vector<FaultClass>(
    const Eigen::MatrixXd&, const std::vector<FaultClass>&,
    const Eigen::MatrixXd&)>;

struct FitOptions {
  std::vector<int> record_projection_iterations;
  // precomputed PCA of the row-normalized combined data (basis d x pca_dim);
  // must equal what datf_fit_predict would compute itself
  const linalg::PcaResult* pca = nullptr;
};

/// Full adaptation pipeline: per-row L2 normalization, PCA pre-reduction,
/// a marginal-only solve, then `iterations` refinement passes that rebuild
/// the joint MMD sum from the current pseudo-labels, re-solve and
/// re-predict. Returns the final predictions and the fitted model.
std::pair<std::vector<FaultClass>, AdaptationModel> datf_fit_predict(
    const ingest::DomainDataset& train, const ingest::DomainDataset& test,
    const AdaptationParams& params, const FitOptions& options = {},
    const PseudoLabeler& labeler = {});

nlohmann::ordered_json model_to_json(const AdaptationModel& model);

struct SubspaceAlignResult {
  Eigen::MatrixXd projected_train;  // n_tr x k
  Eigen::MatrixXd projected_test;   // n_te x k
  Eigen::MatrixXd alignment;        // k x k, B_s^T B_t
};

/// Marginal-only comparison method: per-domain PCA bases B_s, B_t; source
/// mapped through B_s (B_s^T B_t), target through B_t.
SubspaceAlignResult subspace_align(const ingest::DomainDataset& train,
                                   const ingest::DomainDataset& test, int k);

/// Scales every row to unit L2 norm (zero rows stay zero).
Eigen::MatrixXd l2_normalize_rows(const Eigen::MatrixXd& X);

}  // namespace tfdiag::adapt

#endif  // TFDIAG_ADAPT_HPP_
