#include "drmpc/transport.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace drmpc;

namespace {

DiscreteDistribution point_mass(const Eigen::VectorXd& at) {
    DiscreteDistribution dist;
    dist.atoms.push_back(at);
    dist.weights = Eigen::VectorXd::Ones(1);
    return dist;
}

DiscreteDistribution random_distribution(int atoms, int dim, std::mt19937& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Eigen::VectorXd> points;
    for (int i = 0; i < atoms; ++i) {
        Eigen::VectorXd p(dim);
        for (int j = 0; j < dim; ++j) p(j) = gauss(rng);
        points.push_back(p);
    }
    DiscreteDistribution dist = DiscreteDistribution::uniform(std::move(points));
    Eigen::VectorXd w(atoms);
    for (int i = 0; i < atoms; ++i) w(i) = 0.05 + std::fabs(gauss(rng));
    dist.weights = w / w.sum();
    return dist;
}

// brute-force scan of the 1-D CVaR objective over its breakpoints
double cvar_bruteforce(const std::vector<double>& values,
                       const std::vector<double>& weights, double beta) {
    double best = std::numeric_limits<double>::infinity();
    for (double breakpoint : values) {
        const double t = -breakpoint;
        double expectation = 0.0;
        for (size_t i = 0; i < values.size(); ++i)
            expectation += weights[i] * std::max(values[i] + t, 0.0);
        best = std::min(best, expectation / beta - t);
    }
    return best;
}

}  // namespace

TEST_CASE("wasserstein: identical distributions") {
    std::mt19937 rng(1);
    const auto dist = random_distribution(5, 3, rng);
    CHECK(wasserstein_discrete(dist, dist) == 0.0);
}

TEST_CASE("wasserstein: point masses") {
    Eigen::VectorXd a(3), b(3);
    a << 1, 2, 3;
    b << 4, 6, 3;
    CHECK(wasserstein_discrete(point_mass(a), point_mass(b)) ==
          doctest::Approx((a - b).norm()).epsilon(1e-15));
}

TEST_CASE("wasserstein: hand coupling on the line") {
    Eigen::VectorXd p0(1), p1(1), p2(1);
    p0 << 0.0;
    p1 << 1.0;
    p2 << 2.0;
    DiscreteDistribution P = DiscreteDistribution::uniform({p0, p1});
    DiscreteDistribution Q = DiscreteDistribution::uniform({p0, p2});
    CHECK(wasserstein_discrete(P, Q) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("wasserstein: symmetry and triangle inequality") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 25; ++trial) {
        const int dim = 1 + static_cast<int>(rng() % 4);
        const auto P = random_distribution(2 + rng() % 5, dim, rng);
        const auto Q = random_distribution(2 + rng() % 5, dim, rng);
        const auto R = random_distribution(2 + rng() % 5, dim, rng);
        const double pq = wasserstein_discrete(P, Q);
        const double qp = wasserstein_discrete(Q, P);
        CHECK(pq == doctest::Approx(qp).epsilon(1e-9));
        const double pr = wasserstein_discrete(P, R);
        const double rq = wasserstein_discrete(R, Q);
        CHECK(pq <= pr + rq + 1e-8);
    }
}

TEST_CASE("wasserstein: input validation") {
    Eigen::VectorXd a2(2), a3(3);
    a2.setZero();
    a3.setZero();
    CHECK_THROWS_AS(wasserstein_discrete(point_mass(a2), point_mass(a3)),
                    std::invalid_argument);
    DiscreteDistribution bad = point_mass(a2);
    bad.weights(0) = 0.7;
    CHECK_THROWS_AS(wasserstein_discrete(bad, point_mass(a2)), std::invalid_argument);
}

TEST_CASE("cvar: constants and beta = 1") {
    const std::vector<double> values{2.5, 2.5, 2.5};
    const std::vector<double> weights{0.2, 0.3, 0.5};
    for (double beta : {0.1, 0.5, 1.0})
        CHECK(cvar_empirical(values, weights, beta) ==
              doctest::Approx(2.5).epsilon(1e-12));

    const std::vector<double> mixed{1.0, -2.0, 4.0};
    const double mean = 0.2 * 1.0 + 0.3 * -2.0 + 0.5 * 4.0;
    CHECK(cvar_empirical(mixed, weights, 1.0) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("cvar: spec example") {
    const std::vector<double> values{1, 2, 3, 4, 5};
    const std::vector<double> weights(5, 0.2);
    CHECK(cvar_empirical(values, weights, 0.4) == doctest::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("cvar: matches brute force on random instances") {
    std::mt19937 rng(3);
    std::normal_distribution<double> gauss(0.0, 2.0);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int count = 1 + static_cast<int>(rng() % 12);
        std::vector<double> values(count), weights(count);
        double total = 0.0;
        for (int i = 0; i < count; ++i) {
            values[i] = gauss(rng);
            weights[i] = 0.05 + unif(rng);
            total += weights[i];
        }
        for (auto& w : weights) w /= total;
        const double beta = unif(rng);
        CHECK(cvar_empirical(values, weights, beta) ==
              doctest::Approx(cvar_bruteforce(values, weights, beta)).epsilon(1e-10));
    }
}

TEST_CASE("cvar: dominates the mean and decreases in beta") {
    std::mt19937 rng(4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int count = 2 + static_cast<int>(rng() % 8);
        std::vector<double> values(count);
        std::vector<double> weights(count, 1.0 / count);
        double mean = 0.0;
        for (int i = 0; i < count; ++i) {
            values[i] = gauss(rng);
            mean += values[i] / count;
        }
        double previous = std::numeric_limits<double>::infinity();
        for (double beta : {0.1, 0.3, 0.6, 1.0}) {
            const double value = cvar_empirical(values, weights, beta);
            CHECK(value >= mean - 1e-12);
            CHECK(value <= previous + 1e-12);
            previous = value;
        }
    }
}

TEST_CASE("cvar: argument validation") {
    CHECK_THROWS_AS(cvar_empirical({}, {}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(cvar_empirical({1.0}, {1.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(cvar_empirical({1.0}, {1.0}, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(cvar_empirical({1.0}, {0.5}, 0.5), std::invalid_argument);
}

TEST_CASE("worst case expectation: zero radius is the sample mean") {
    std::mt19937 rng(5);
    const auto P = random_distribution(6, 3, rng);
    std::vector<PwaPiece> pieces;
    PwaPiece piece;
    piece.a = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
    piece.c = 0.3;
    pieces.push_back(piece);
    piece.a = -piece.a;
    piece.c = -0.1;
    pieces.push_back(piece);
    const PwaFunction h(pieces);

    double mean = 0.0;
    for (size_t i = 0; i < P.atoms.size(); ++i)
        mean += P.weights(static_cast<Eigen::Index>(i)) * h.value(P.atoms[i]);
    CHECK(worst_case_expectation_pwa(h, P, Eigen::VectorXd(), 0.0) ==
          doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("worst case expectation: affine function attained by a shift") {
    // for h(y) = a . y the supremum over the ball is E[a.y] + ||a|| eps,
    // attained by translating every atom by eps a/||a||
    std::mt19937 rng(6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = 1 + static_cast<int>(rng() % 4);
        const auto P = random_distribution(4, dim, rng);
        PwaPiece piece;
        piece.a = Eigen::VectorXd(dim);
        for (int j = 0; j < dim; ++j) piece.a(j) = gauss(rng);
        const PwaFunction h({piece});
        const double eps = std::fabs(gauss(rng));

        const double claimed = worst_case_expectation_pwa(h, P, Eigen::VectorXd(), eps);

        DiscreteDistribution shifted = P;
        const Eigen::VectorXd direction = piece.a / piece.a.norm();
        for (auto& atom : shifted.atoms) atom += eps * direction;
        double attained = 0.0;
        for (size_t i = 0; i < shifted.atoms.size(); ++i)
            attained += shifted.weights(static_cast<Eigen::Index>(i)) *
                        h.value(shifted.atoms[i]);
        CHECK(wasserstein_discrete(P, shifted) <= eps + 1e-9);
        CHECK(claimed == doctest::Approx(attained).epsilon(1e-9));
    }
}

TEST_CASE("worst case expectation: absolute value at a point mass") {
    PwaPiece up, down;
    up.a = Eigen::VectorXd::Ones(1);
    down.a = -Eigen::VectorXd::Ones(1);
    const PwaFunction h({up, down});
    const DiscreteDistribution P = point_mass(Eigen::VectorXd::Zero(1));
    CHECK(worst_case_expectation_pwa(h, P, Eigen::VectorXd(), 1.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("worst case expectation: affine in eps with slope lipschitz") {
    std::mt19937 rng(7);
    const auto P = random_distribution(5, 2, rng);
    PwaPiece p1, p2;
    p1.a = Eigen::Vector2d(1.0, -2.0);
    p2.a = Eigen::Vector2d(0.5, 0.5);
    p2.c = 0.2;
    const PwaFunction h({p1, p2});
    const double at0 = worst_case_expectation_pwa(h, P, Eigen::VectorXd(), 0.0);
    for (double eps : {0.1, 0.5, 2.0})
        CHECK(worst_case_expectation_pwa(h, P, Eigen::VectorXd(), eps) ==
              doctest::Approx(at0 + h.lipschitz() * eps).epsilon(1e-12));
}

TEST_CASE("worst case expectation dominates feasible perturbations") {
    // Q built by joint atom perturbations with total transport budget <= eps
    // never exceeds the closed form; the steepest-piece shift approaches it
    std::mt19937 rng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int instance = 0; instance < 5; ++instance) {
        const int atoms = 2 + static_cast<int>(rng() % 5);
        const auto P = random_distribution(atoms, 2, rng);
        std::vector<PwaPiece> pieces;
        const int piece_count = 1 + static_cast<int>(rng() % 3);
        for (int j = 0; j < piece_count; ++j) {
            PwaPiece piece;
            piece.a = Eigen::Vector2d(gauss(rng), gauss(rng));
            piece.c = 0.3 * gauss(rng);
            pieces.push_back(piece);
        }
        const PwaFunction h(pieces);
        const double eps = 0.2 + unif(rng);
        const double claimed = worst_case_expectation_pwa(h, P, Eigen::VectorXd(), eps);

        for (int draw = 0; draw < 1000; ++draw) {
            DiscreteDistribution Q = P;
            // per-atom displacements with weighted total length <= eps
            double budget = eps;
            for (size_t i = 0; i < Q.atoms.size() && budget > 0; ++i) {
                Eigen::Vector2d direction(gauss(rng), gauss(rng));
                if (direction.norm() < 1e-12) continue;
                direction.normalize();
                const double w = Q.weights(static_cast<Eigen::Index>(i));
                const double step = unif(rng) * budget / w;
                Q.atoms[i] += step * direction;
                budget -= step * w;
            }
            double value = 0.0;
            for (size_t i = 0; i < Q.atoms.size(); ++i)
                value += Q.weights(static_cast<Eigen::Index>(i)) * h.value(Q.atoms[i]);
            CHECK(value <= claimed + 1e-9);
        }

        // sending a sliver of mass far along the steepest piece attains the
        // supremum up to the sliver size
        const auto& steepest =
            *std::max_element(pieces.begin(), pieces.end(),
                              [](const PwaPiece& x, const PwaPiece& y) {
                                  return x.a.norm() < y.a.norm();
                              });
        const Eigen::VectorXd direction = steepest.a / steepest.a.norm();
        const double sliver = 1e-6;
        DiscreteDistribution best = P;
        best.atoms.push_back(P.atoms[0] + (eps / sliver) * direction);
        best.weights.conservativeResize(best.weights.size() + 1);
        best.weights(best.weights.size() - 1) = sliver;
        best.weights(0) -= sliver;
        double attained = 0.0;
        for (size_t i = 0; i < best.atoms.size(); ++i)
            attained +=
                best.weights(static_cast<Eigen::Index>(i)) * h.value(best.atoms[i]);
        CHECK(wasserstein_discrete(P, best) <= eps + 1e-9);
        CHECK(attained <= claimed + 1e-9);
        CHECK(attained >= claimed - 1e-3);
    }
}

TEST_CASE("enumerated l1 pieces evaluate the l1 distance") {
    std::mt19937 rng(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::vector<int> selector{0, 2, 4};
    Eigen::VectorXd reference(3);
    reference << 1.0, -0.5, 0.25;
    const PwaFunction h = enumerate_l1_pieces(selector, reference, 6);
    CHECK(h.num_pieces() == 8);
    CHECK(h.lipschitz() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd y(6);
        for (int j = 0; j < 6; ++j) y(j) = gauss(rng);
        double expected = 0.0;
        for (size_t p = 0; p < selector.size(); ++p)
            expected += std::fabs(y(selector[p]) - reference(p));
        CHECK(h.value(y) == doctest::Approx(expected).epsilon(1e-12));
    }
}
