#include "drmpc/radius.hpp"

#include "drmpc/lifting.hpp"
#include "drmpc/transport.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace drmpc;

namespace {

LtiSystem paper_system() {
    LtiSystem sys;
    sys.A.resize(2, 2);
    sys.A << 0.9, 0.1, 0.05, 0.9;
    sys.B.resize(2, 1);
    sys.B << 0.0, 1.0;
    sys.noise = DisturbanceSpec::gaussian(0.03);
    return sys;
}

TrajectoryDataset paper_dataset(int N, std::uint64_t seed) {
    return generate_dataset(paper_system(), N, 5, DisturbanceSpec::gaussian(0.5),
                            DisturbanceSpec::gaussian(0.5), seed);
}

GuaranteeConstants constants(double alpha, double c1, double c2, int N, int nT,
                             double gamma) {
    GuaranteeConstants k;
    k.alpha = alpha;
    k.c1 = c1;
    k.c2 = c2;
    k.a = 2.0;
    k.b = 1.0;
    k.N = N;
    k.nT = nT;
    k.gamma_of_alpha = [gamma](double) { return gamma; };
    return k;
}

double lad_objective(const std::vector<double>& V, const std::vector<double>& E,
                     double eps1, double eps2) {
    double total = 0.0;
    for (size_t l = 0; l < V.size(); ++l)
        total += std::fabs(eps1 * V[l] + eps2 - E[l]);
    return total;
}

}  // namespace

TEST_CASE("theoretical radius: constant gamma becomes eps1") {
    const auto radius = theoretical_radius(constants(0.1, 1.0, 1.0, 100, 10, 0.2));
    CHECK(radius.eps1 == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("theoretical radius: frozen scalar evaluation") {
    // (log(20)/100)^(1/10), evaluated with 40-digit arithmetic
    const auto radius = theoretical_radius(constants(0.1, 1.0, 1.0, 100, 10, 0.0));
    CHECK(radius.eps2 == doctest::Approx(0.7041258683309671).epsilon(1e-14));
}

TEST_CASE("theoretical radius: branch continuity point") {
    // c1 chosen so log(2 c1/alpha) = c2 N; both exponents give 1
    const double c1 = std::exp(3.0) / 20.0;
    const auto radius = theoretical_radius(constants(0.1, c1, 1.0, 3, 10, 0.0));
    CHECK(radius.eps2 == doctest::Approx(1.0).epsilon(1e-12));
    GuaranteeConstants k = constants(0.1, c1, 1.0, 3, 10, 0.0);
    k.a = 7.0;  // other branch exponent, same value at the threshold
    CHECK(theoretical_radius(k).eps2 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("theoretical radius: eps2 strictly decreasing in N on the large-N branch") {
    double previous = std::numeric_limits<double>::infinity();
    for (int N : {10, 20, 50, 100, 500}) {
        const double eps2 = theoretical_radius(constants(0.1, 1.0, 1.0, N, 10, 0.0)).eps2;
        CHECK(eps2 < previous);
        previous = eps2;
    }
}

TEST_CASE("theoretical radius: validation") {
    CHECK_THROWS_AS(theoretical_radius(constants(0.0, 1, 1, 10, 10, 0.1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(theoretical_radius(constants(1.0, 1, 1, 10, 10, 0.1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(theoretical_radius(constants(0.1, -1, 1, 10, 10, 0.1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(theoretical_radius(constants(0.1, 1, 1, 10, 2, 0.1)),
                    std::invalid_argument);
}

TEST_CASE("lad fit: exact recovery of linear diagnostics") {
    const std::vector<double> V{0.5, 1.0, 1.5, 2.0, 3.0};
    std::vector<double> E;
    for (double v : V) E.push_back(2.0 * v + 3.0);
    const auto [eps1, eps2] = lad_fit_nonneg(V, E);
    CHECK(eps1 == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(eps2 == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("lad fit: degenerate slope, objective checked against a grid") {
    const std::vector<double> V{1.0, 1.0, 1.0};
    const std::vector<double> E{0.0, 1.0, 2.0};
    const auto [eps1, eps2] = lad_fit_nonneg(V, E);
    CHECK(lad_objective(V, E, eps1, eps2) == doctest::Approx(2.0).epsilon(1e-6));

    double grid_best = std::numeric_limits<double>::infinity();
    for (double a = 0.0; a <= 3.0; a += 1e-3)
        for (double b = 0.0; b <= 3.0; b += 1e-1)
            grid_best = std::min(grid_best, lad_objective(V, E, a, b));
    CHECK(lad_objective(V, E, eps1, eps2) <= grid_best + 1e-6);
}

TEST_CASE("lad fit: constant shift moves the intercept") {
    const std::vector<double> V{0.5, 1.5, 2.5, 4.0};
    std::vector<double> E{1.0, 1.8, 3.1, 4.2};
    const auto [a1, b1] = lad_fit_nonneg(V, E);
    std::vector<double> shifted = E;
    for (auto& e : shifted) e += 2.0;
    const auto [a2, b2] = lad_fit_nonneg(V, shifted);
    CHECK(a2 == doctest::Approx(a1).epsilon(1e-5));
    CHECK(b2 == doctest::Approx(b1 + 2.0).epsilon(1e-5));
}

TEST_CASE("lad fit: decreasing trend pins the slope at zero") {
    const std::vector<double> V{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> E{4.0, 3.0, 2.0, 1.0};
    const auto [eps1, eps2] = lad_fit_nonneg(V, E);
    CHECK(eps1 <= 1e-7);

    // exhaustive check over the grid that no feasible pair does better
    const double attained = lad_objective(V, E, eps1, eps2);
    double grid_best = std::numeric_limits<double>::infinity();
    for (double a = 0.0; a <= 2.0; a += 1e-2)
        for (double b = 0.0; b <= 5.0; b += 1e-2)
            grid_best = std::min(grid_best, lad_objective(V, E, a, b));
    CHECK(attained <= grid_best + 1e-6);
}

TEST_CASE("lad fit: validation") {
    CHECK_THROWS_AS(lad_fit_nonneg({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(lad_fit_nonneg({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("loo radius: diagnostics are nonnegative and the fit is sane") {
    const auto data = paper_dataset(10, 42);
    const LooRadiusResult result = loo_radius(data);
    CHECK(result.diagnostics.V.minCoeff() >= 0.0);
    CHECK(result.diagnostics.E.minCoeff() >= 0.0);
    CHECK(result.radius.eps1 >= 0.0);
    CHECK(result.radius.eps2 >= 0.0);

    // returned pair no worse than the flat competitor (0, median E)
    std::vector<double> V(result.diagnostics.V.data(), result.diagnostics.V.data() + 10);
    std::vector<double> E(result.diagnostics.E.data(), result.diagnostics.E.data() + 10);
    std::vector<double> sorted = E;
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[4] + sorted[5]);
    CHECK(lad_objective(V, E, result.radius.eps1, result.radius.eps2) <=
          lad_objective(V, E, 0.0, median) + 1e-6);
}

TEST_CASE("loo radius: E_l equals the transport distance between ensembles") {
    // the held-out prediction ensemble (N-1 atoms) vs the full one (N atoms
    // including the observation itself)
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto data = paper_dataset(10, seed);
        const int N = data.size();
        const LooRadiusResult result = loo_radius(data);

        for (int held = 0; held < N; ++held) {
            TrajectoryDataset rest;
            rest.n = data.n;
            rest.m = data.m;
            rest.T = data.T;
            for (int i = 0; i < N; ++i)
                if (i != held) rest.records.push_back(data.records[i]);
            const MultiStepPredictor fit = fit_multistep_ls(rest, true);
            const auto residuals = compute_residuals(fit.L_hat, data);
            const auto& z_held = data.records[held].z;

            std::vector<Eigen::VectorXd> loo_atoms, full_atoms;
            const Eigen::VectorXd base = fit.L_hat * z_held;
            for (int i = 0; i < N; ++i) {
                if (i != held) loo_atoms.push_back(base + residuals[i]);
                full_atoms.push_back(base + residuals[i]);
            }
            const double distance =
                wasserstein_discrete(DiscreteDistribution::uniform(loo_atoms),
                                     DiscreteDistribution::uniform(full_atoms));
            CHECK(result.diagnostics.E(held) ==
                  doctest::Approx(distance).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("loo radius: rejects tiny datasets") {
    const auto data = paper_dataset(2, 5);
    CHECK_THROWS_AS(loo_radius(data), std::invalid_argument);
}

TEST_CASE("loo radius: singular leave-one-out fit names the index") {
    // 7 records: every leave-one-out set has 6 < 7 regressor columns
    const auto data = paper_dataset(7, 8);
    CHECK_THROWS_AS(loo_radius(data), singular_fit_error);
}
