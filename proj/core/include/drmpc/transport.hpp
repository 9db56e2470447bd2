#pragma once

#include "drmpc/identification.hpp"

#include <Eigen/Core>

#include <vector>

namespace drmpc {

/*
 * Convex piecewise-affine function of a predicted state stack y and a
 * decision z: value(y, z) = max_j (a_j . y + b_j . z + c_j). A piece with
 * empty b has no z term. The cached lipschitz constant is max_j ||a_j||_2,
 * the Lipschitz modulus in y under the Euclidean norm.
 */
struct PwaPiece {
    Eigen::VectorXd a;
    Eigen::VectorXd b;  // may be empty
    double c = 0.0;
};

class PwaFunction {
  public:
    explicit PwaFunction(std::vector<PwaPiece> pieces);

    double value(const Eigen::VectorXd& y, const Eigen::VectorXd& z) const;
    double value(const Eigen::VectorXd& y) const;  // pieces must have empty b

    const std::vector<PwaPiece>& pieces() const { return pieces_; }
    double lipschitz() const { return lipschitz_; }
    int num_pieces() const { return static_cast<int>(pieces_.size()); }

  private:
    std::vector<PwaPiece> pieces_;
    double lipschitz_;
};

// max over all sign patterns of sum_{p in selector} +-(y_p - reference_p):
// the enumerated piecewise-affine form of the l1 tracking cost
// sum_p |y_p - reference_p|. 2^|selector| pieces; intended for small
// horizons where it serves as an exact cross-check.
PwaFunction enumerate_l1_pieces(const std::vector<int>& selector,
                                const Eigen::VectorXd& reference, int y_dim);

/*
 * Exact 1-Wasserstein distance between discrete distributions under the
 * Euclidean ground metric, via the transportation linear program.
 * Coincident atoms (pairwise distance <= 1e-12) are merged first.
 */
double wasserstein_discrete(const DiscreteDistribution& P, const DiscreteDistribution& Q);

/*
 * CVaR at level 1-beta of a discrete distribution of scalar values:
 * inf_t [ beta^{-1} E[(value + t)_+] - t ]. The objective is piecewise
 * linear convex in t with breakpoints at t = -value_k, so the infimum is
 * attained at a breakpoint and computed exactly.
 */
double cvar_empirical(const std::vector<double>& values,
                      const std::vector<double>& weights, double beta);

/*
 * sup over the eps-ball (1-Wasserstein, unbounded support) around P of
 * E[h(y, z)]. For piecewise-affine h this is the closed form
 * lipschitz(h) * eps + E_P[h].
 */
double worst_case_expectation_pwa(const PwaFunction& h, const DiscreteDistribution& P,
                                  const Eigen::VectorXd& z, double eps);

}  // namespace drmpc
