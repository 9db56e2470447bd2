#pragma once

#include "drmpc/lifting.hpp"

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace drmpc {

// raised when a least-squares block row has a rank-deficient regressor
class singular_fit_error : public std::runtime_error {
  public:
    singular_fit_error(int block_row, const std::string& what)
        : std::runtime_error(what), block_row_(block_row) {}
    int block_row() const { return block_row_; }

  private:
    int block_row_;
};

/*
 * Multi-step linear predictor fitted on trajectory data. residuals[i] is
 * y_i - L_hat z_i over the fitting dataset; anchors[i] keeps the z_i used
 * by the decision-dependent ambiguity radius.
 */
struct MultiStepPredictor {
    Eigen::MatrixXd L_hat;                    // nT x (n + mT)
    std::vector<Eigen::VectorXd> residuals;   // N vectors in R^{nT}
    std::vector<Eigen::VectorXd> anchors;     // N vectors in R^{n+mT}
    int n = 0, m = 0, T = 0;
    bool causal = true;

    int sample_count() const { return static_cast<int>(residuals.size()); }
    void validate() const;
};

struct DiscreteDistribution {
    std::vector<Eigen::VectorXd> atoms;
    Eigen::VectorXd weights;

    int dim() const { return atoms.empty() ? 0 : static_cast<int>(atoms.front().size()); }
    void validate() const;  // >= 1 atom, weights sum to 1 within 1e-12

    static DiscreteDistribution uniform(std::vector<Eigen::VectorXd> atoms);
};

/*
 * Least squares fit of L over the dataset, one block row at a time. With
 * enforce_causal, block row r regresses only on (x0, u_0..u_r); columns of
 * strictly future inputs are exactly zero. Rank decisions use the threshold
 * 1e-10 * (largest singular value); a deficient block row raises
 * singular_fit_error naming it.
 */
MultiStepPredictor fit_multistep_ls(const TrajectoryDataset& data, bool enforce_causal);

// predictor from an externally supplied multi-step matrix
MultiStepPredictor make_predictor(const Eigen::MatrixXd& L_hat,
                                  const TrajectoryDataset& data, bool causal);

std::vector<Eigen::VectorXd> compute_residuals(const Eigen::MatrixXd& L_hat,
                                               const TrajectoryDataset& data);

// N equally weighted atoms L_hat z + residual_i
DiscreteDistribution predict_ensemble(const MultiStepPredictor& pred,
                                      const Eigen::VectorXd& z);

}  // namespace drmpc
