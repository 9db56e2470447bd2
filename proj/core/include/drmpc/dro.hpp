#pragma once

#include "drmpc/conic.hpp"
#include "drmpc/identification.hpp"
#include "drmpc/radius.hpp"
#include "drmpc/transport.hpp"

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <variant>
#include <vector>

namespace drmpc {

/*
 * l1 tracking cost sum_{p} |y_{selector[p]} - reference[p]|, kept in
 * separable form and expanded to per-sample epigraph variables inside the
 * program builder. Lipschitz modulus sqrt(|selector|), the norm of every
 * sign-pattern gradient.
 */
struct SeparableL1Cost {
    std::vector<int> selector;
    Eigen::VectorXd reference;

    double lipschitz() const { return std::sqrt(static_cast<double>(selector.size())); }
    void validate(int y_dim) const;
};

using CostFunction = std::variant<SeparableL1Cost, PwaFunction>;

// elementwise bounds on the stacked input sequence; empty vectors mean
// unbounded on that side
struct InputBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct FhocSpec {
    MultiStepPredictor predictor;
    CostFunction cost;
    std::optional<PwaFunction> constraint;  // CVaR-constrained when present
    double beta = 0.2;
    AmbiguityRadius radius;
    double slack_weight = 0.0;  // 0 disables the CVaR slack
    InputBounds input_bounds;
    std::optional<Eigen::VectorXd> pinned_inputs;  // fixes the whole input sequence

    void validate() const;
    double cost_lipschitz() const;
};

// indices of the named variable groups inside a built program
struct FhocLayout {
    int n = 0, m = 0, T = 0, N = 0;
    int z_offset = 0;
    int z_dim = 0;
    std::vector<int> s;  // per-sample cost epigraph
    int t = -1;          // CVaR shift, -1 when no constraint
    std::vector<int> q;  // per-sample CVaR epigraph
    int sigma = -1;      // CVaR slack, -1 when disabled
    std::vector<int> r;  // anchor-distance cone bounds, empty when eps1 == 0
};

struct FhocProgram {
    ConicProgram program;
    FhocLayout layout;
};

/*
 * Finite conic form of the distributionally robust FHOC problem for
 * piecewise-affine cost and constraint:
 *
 *   min  lam * (eps1 * mean_i r_i + eps2) + mean_i s_i + slack_weight * sigma
 *   s.t. z[0:n] = x0, input bounds,
 *        cost pieces:   a_j (Lhat z + xi_i) + b_j z + c_j <= s_i
 *        CVaR:          th * (eps1 * mean_i r_i + eps2) + mean_i q_i <= t beta + sigma
 *                       d_k (Lhat z + xi_i) + e_k z + f_k + t <= q_i,   q_i >= 0
 *        cones:         r_i >= || z - z_i ||   (present when eps1 > 0)
 *
 * lam and th are the precomputed max piece-gradient norms of cost and
 * constraint. The separable l1 cost replaces the cost pieces by per-sample
 * absolute-value epigraph variables summing to s_i.
 */
FhocProgram build_drmpc(const FhocSpec& spec, const Eigen::VectorXd& x0);

// the eps = 0 special case: identical program with the robust terms
// collapsed and the cone blocks omitted
FhocProgram build_saa(const FhocSpec& spec, const Eigen::VectorXd& x0);

struct FhocSolution {
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd z;
    Eigen::VectorXd s, q, r;
    double t = 0.0;
    double sigma = 0.0;
    double objective = 0.0;
    SolverStats stats;

    Eigen::VectorXd first_input(const FhocLayout& layout) const;
};

FhocSolution solve_fhoc(const FhocProgram& prog, const SolverSettings& settings = {});

/*
 * Worst-case CVaR of g over the eps-ball around P at fixed z:
 * theta * eps / beta + CVaR_{1-beta} of the empirical g values. z is
 * feasible for the DR CVaR constraint (without slack) iff this is <= 0.
 */
double evaluate_worst_case_cvar(const PwaFunction& g, const DiscreteDistribution& P,
                                const Eigen::VectorXd& z, double eps, double beta);

}  // namespace drmpc
