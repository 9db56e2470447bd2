#include "drmpc/identification.hpp"

#include "drmpc/lifting.hpp"
#include "drmpc/transport.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>

using namespace drmpc;

namespace {

LtiSystem paper_system(double noise = 0.03) {
    LtiSystem sys;
    sys.A.resize(2, 2);
    sys.A << 0.9, 0.1, 0.05, 0.9;
    sys.B.resize(2, 1);
    sys.B << 0.0, 1.0;
    sys.noise = noise > 0 ? DisturbanceSpec::gaussian(noise) : DisturbanceSpec::zero();
    return sys;
}

TrajectoryDataset paper_dataset(int N, std::uint64_t seed, double noise = 0.03) {
    return generate_dataset(paper_system(noise), N, 5, DisturbanceSpec::gaussian(0.5),
                            DisturbanceSpec::gaussian(0.5), seed);
}

double spectral_norm(const Eigen::MatrixXd& m) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

}  // namespace

TEST_CASE("fit recovers the true lifted map from noise-free data") {
    const auto data = paper_dataset(12, 7, 0.0);
    const LiftedDynamics truth = build_lifted(paper_system().A, paper_system().B, 5);
    for (bool causal : {true, false}) {
        const MultiStepPredictor pred = fit_multistep_ls(data, causal);
        CHECK((pred.L_hat - truth.L).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("causal fit zeroes forbidden blocks exactly") {
    const auto data = paper_dataset(10, 3);
    const MultiStepPredictor pred = fit_multistep_ls(data, true);
    const int n = 2, m = 1, T = 5;
    for (int r = 0; r < T; ++r)
        for (int c = r + 1; c < T; ++c)
            CHECK(pred.L_hat.block(r * n, n + c * m, n, m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("residual-regressor orthogonality per block row") {
    const auto data = paper_dataset(10, 21);
    const MultiStepPredictor pred = fit_multistep_ls(data, true);
    const int n = 2, m = 1, T = 5;
    for (int r = 0; r < T; ++r) {
        const int cols = n + (r + 1) * m;
        Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(n, cols);
        for (int i = 0; i < data.size(); ++i)
            cross += pred.residuals[i].segment(r * n, n) *
                     data.records[i].z.head(cols).transpose();
        CHECK(cross.cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("unconstrained fit attains at most the causal objective") {
    const auto data = paper_dataset(12, 5);
    const MultiStepPredictor causal = fit_multistep_ls(data, true);
    const MultiStepPredictor full = fit_multistep_ls(data, false);
    auto objective = [&](const MultiStepPredictor& p) {
        double total = 0.0;
        for (const auto& r : p.residuals) total += r.squaredNorm();
        return total;
    };
    CHECK(objective(full) <= objective(causal) + 1e-12);
}

TEST_CASE("singular fit names the deficient block row") {
    // 3 records cannot determine block row 1 (needs n + 2m = 4 columns)
    const auto data = paper_dataset(3, 11, 0.0);
    try {
        fit_multistep_ls(data, true);
        FAIL("expected singular_fit_error");
    } catch (const singular_fit_error& err) {
        CHECK(err.block_row() == 1);
    }
}

TEST_CASE("compute_residuals trivial cases") {
    const auto data = paper_dataset(6, 9, 0.0);
    const int ydim = 10, zdim = 7;

    const auto with_zero = compute_residuals(Eigen::MatrixXd::Zero(ydim, zdim), data);
    for (int i = 0; i < data.size(); ++i)
        CHECK((with_zero[i] - data.records[i].y).norm() == 0.0);

    const LiftedDynamics truth = build_lifted(paper_system().A, paper_system().B, 5);
    const auto with_truth = compute_residuals(truth.L, data);
    for (const auto& r : with_truth) CHECK(r.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("fit residuals match recomputation") {
    const auto data = paper_dataset(10, 31);
    const MultiStepPredictor pred = fit_multistep_ls(data, true);
    const auto again = compute_residuals(pred.L_hat, data);
    for (int i = 0; i < data.size(); ++i)
        CHECK((pred.residuals[i] - again[i]).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("predict_ensemble: fitting record reproduces its own observation") {
    const auto data = paper_dataset(8, 13);
    const MultiStepPredictor pred = fit_multistep_ls(data, true);
    for (int i = 0; i < data.size(); ++i) {
        const DiscreteDistribution dist = predict_ensemble(pred, data.records[i].z);
        CHECK((dist.atoms[i] - data.records[i].y).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(dist.weights(i) == doctest::Approx(1.0 / data.size()).epsilon(1e-15));
    }
}

TEST_CASE("predict_ensemble: zero residuals collapse to one point") {
    const auto data = paper_dataset(8, 17, 0.0);
    const MultiStepPredictor pred = fit_multistep_ls(data, true);
    Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(7, -1.0, 1.0);
    const DiscreteDistribution dist = predict_ensemble(pred, z);
    for (const auto& atom : dist.atoms)
        CHECK((atom - dist.atoms[0]).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("predict_ensemble: affine in z") {
    const auto data = paper_dataset(7, 19);
    const MultiStepPredictor pred = fit_multistep_ls(data, true);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(7);
    Eigen::VectorXd delta = Eigen::VectorXd::LinSpaced(7, 0.1, 0.7);
    const auto base = predict_ensemble(pred, z);
    const auto shifted = predict_ensemble(pred, z + delta);
    const Eigen::VectorXd image = pred.L_hat * delta;
    for (size_t i = 0; i < base.atoms.size(); ++i)
        CHECK((shifted.atoms[i] - base.atoms[i] - image).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("externally supplied predictor carries residuals and anchors") {
    const auto data = paper_dataset(6, 23);
    const LiftedDynamics truth = build_lifted(paper_system().A, paper_system().B, 5);
    const MultiStepPredictor pred = make_predictor(truth.L, data, false);
    CHECK(pred.sample_count() == 6);
    for (int i = 0; i < 6; ++i) {
        CHECK((pred.anchors[i] - data.records[i].z).norm() == 0.0);
        CHECK((pred.residuals[i] - (data.records[i].y - truth.L * data.records[i].z))
                  .norm() == 0.0);
    }
}

TEST_CASE("model-mismatch transport bound holds on random instances") {
    // exact d_W between the fitted and true-dynamics ensembles is bounded by
    // ||Lhat - L|| times the mean anchor distance
    std::mt19937 rng(101);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const LiftedDynamics truth = build_lifted(paper_system().A, paper_system().B, 5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto data = paper_dataset(8, 500 + trial);
        const MultiStepPredictor fitted = fit_multistep_ls(data, true);
        const MultiStepPredictor exact = make_predictor(truth.L, data, false);

        Eigen::VectorXd z(7);
        for (int j = 0; j < 7; ++j) z(j) = gauss(rng);
        const double distance =
            wasserstein_discrete(predict_ensemble(fitted, z), predict_ensemble(exact, z));
        double mean_anchor = 0.0;
        for (const auto& anchor : fitted.anchors) mean_anchor += (z - anchor).norm();
        mean_anchor /= fitted.sample_count();
        const double bound = spectral_norm(fitted.L_hat - truth.L) * mean_anchor;
        CHECK(distance <= bound + 1e-8);
    }
}

TEST_CASE("distribution invariants are enforced") {
    DiscreteDistribution dist;
    CHECK_THROWS_AS(dist.validate(), std::invalid_argument);
    dist.atoms.push_back(Eigen::Vector2d(0, 0));
    dist.weights.resize(1);
    dist.weights << 0.5;
    CHECK_THROWS_AS(dist.validate(), std::invalid_argument);
    dist.weights << 1.0;
    CHECK_NOTHROW(dist.validate());
}
