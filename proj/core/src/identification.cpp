#include "drmpc/identification.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace drmpc {

void MultiStepPredictor::validate() const {
    if (L_hat.rows() != n * T || L_hat.cols() != n + m * T)
        throw std::invalid_argument("predictor: L_hat shape mismatch");
    if (residuals.size() != anchors.size() || residuals.empty())
        throw std::invalid_argument("predictor: residual/anchor lists inconsistent");
}

void DiscreteDistribution::validate() const {
    if (atoms.empty()) throw std::invalid_argument("distribution: needs at least one atom");
    if (weights.size() != static_cast<Eigen::Index>(atoms.size()))
        throw std::invalid_argument("distribution: weight count mismatch");
    if ((weights.array() < 0).any())
        throw std::invalid_argument("distribution: negative weight");
    if (std::fabs(weights.sum() - 1.0) > 1e-12)
        throw std::invalid_argument("distribution: weights must sum to 1");
    const int d = dim();
    for (const auto& a : atoms)
        if (a.size() != d) throw std::invalid_argument("distribution: atom dimension mismatch");
}

DiscreteDistribution DiscreteDistribution::uniform(std::vector<Eigen::VectorXd> atoms) {
    DiscreteDistribution dist;
    const int count = static_cast<int>(atoms.size());
    dist.atoms = std::move(atoms);
    dist.weights = Eigen::VectorXd::Constant(count, 1.0 / count);
    return dist;
}

namespace {

// solve min ||Z m - Y||_F over m, columns of Z restricted to `cols`;
// raises singular_fit_error(block_row) when rank(Z) < cols
Eigen::MatrixXd block_row_ls(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Y,
                             int block_row) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-10 * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cutoff) ++rank;
    if (rank < Z.cols())
        throw singular_fit_error(
            block_row, "fit_multistep_ls: rank-deficient regressor in block row " +
                           std::to_string(block_row));
    return svd.solve(Y);
}

}  // namespace

MultiStepPredictor fit_multistep_ls(const TrajectoryDataset& data, bool enforce_causal) {
    data.validate();
    const int n = data.n, m = data.m, T = data.T;
    const int N = data.size();
    const int zdim = n + m * T;

    Eigen::MatrixXd Z(N, zdim);
    Eigen::MatrixXd Y(N, n * T);
    for (int i = 0; i < N; ++i) {
        Z.row(i) = data.records[i].z.transpose();
        Y.row(i) = data.records[i].y.transpose();
    }

    MultiStepPredictor pred;
    pred.n = n;
    pred.m = m;
    pred.T = T;
    pred.causal = enforce_causal;
    pred.L_hat = Eigen::MatrixXd::Zero(n * T, zdim);

    for (int r = 0; r < T; ++r) {
        const int cols = enforce_causal ? n + (r + 1) * m : zdim;
        const Eigen::MatrixXd coeffs =
            block_row_ls(Z.leftCols(cols), Y.middleCols(r * n, n), r);
        pred.L_hat.block(r * n, 0, n, cols) = coeffs.transpose();
    }

    pred.residuals = compute_residuals(pred.L_hat, data);
    pred.anchors.reserve(N);
    for (const auto& rec : data.records) pred.anchors.push_back(rec.z);
    return pred;
}

MultiStepPredictor make_predictor(const Eigen::MatrixXd& L_hat,
                                  const TrajectoryDataset& data, bool causal) {
    data.validate();
    if (L_hat.rows() != data.n * data.T || L_hat.cols() != data.n + data.m * data.T)
        throw std::invalid_argument("make_predictor: L_hat shape mismatch");
    MultiStepPredictor pred;
    pred.L_hat = L_hat;
    pred.n = data.n;
    pred.m = data.m;
    pred.T = data.T;
    pred.causal = causal;
    pred.residuals = compute_residuals(L_hat, data);
    pred.anchors.reserve(data.size());
    for (const auto& rec : data.records) pred.anchors.push_back(rec.z);
    return pred;
}

std::vector<Eigen::VectorXd> compute_residuals(const Eigen::MatrixXd& L_hat,
                                               const TrajectoryDataset& data) {
    data.validate();
    if (L_hat.rows() != data.n * data.T || L_hat.cols() != data.n + data.m * data.T)
        throw std::invalid_argument("compute_residuals: L_hat shape mismatch");
    std::vector<Eigen::VectorXd> residuals;
    residuals.reserve(data.size());
    for (const auto& rec : data.records) residuals.push_back(rec.y - L_hat * rec.z);
    return residuals;
}

DiscreteDistribution predict_ensemble(const MultiStepPredictor& pred,
                                      const Eigen::VectorXd& z) {
    pred.validate();
    if (z.size() != pred.n + pred.m * pred.T)
        throw std::invalid_argument("predict_ensemble: z dimension mismatch");
    const Eigen::VectorXd base = pred.L_hat * z;
    std::vector<Eigen::VectorXd> atoms;
    atoms.reserve(pred.residuals.size());
    for (const auto& xi : pred.residuals) atoms.push_back(base + xi);
    return DiscreteDistribution::uniform(std::move(atoms));
}

}  // namespace drmpc
