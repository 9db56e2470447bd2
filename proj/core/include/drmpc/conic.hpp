#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <string>
#include <utility>
#include <vector>

namespace drmpc {

// Sparse affine expression  sum_k coeff_k * x[index_k] + constant.
struct LinearExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinearExpr() = default;
    LinearExpr(std::vector<std::pair<int, double>> t, double c)
        : terms(std::move(t)), constant(c) {}

    LinearExpr& add(int var, double coeff) {
        if (coeff != 0.0) terms.emplace_back(var, coeff);
        return *this;
    }
    double evaluate(const Eigen::VectorXd& x) const;
};

/*
 * Solver-agnostic conic program
 *
 *   min  objective' x
 *   s.t. eq_k(x)   = 0        k = 1..#equalities
 *        in_k(x)  <= 0        k = 1..#inequalities
 *        x[bound_var] >= || affine arg ||_2   for every cone block
 *
 * All variables are free; sign restrictions are ordinary inequality rows.
 */
class ConicProgram {
  public:
    struct ConeBlock {
        int bound_var = -1;
        std::vector<LinearExpr> arg;
    };

    int add_variable(std::string name, double objective_coeff = 0.0);
    void add_equality(LinearExpr expr);
    void add_inequality(LinearExpr expr);
    void add_soc(int bound_var, std::vector<LinearExpr> arg);
    void set_objective(int var, double coeff);
    void set_objective_constant(double c) { obj_constant_ = c; }
    double objective_constant() const { return obj_constant_; }

    int num_variables() const { return static_cast<int>(obj_.size()); }
    const std::vector<double>& objective() const { return obj_; }
    const std::vector<LinearExpr>& equalities() const { return equalities_; }
    const std::vector<LinearExpr>& inequalities() const { return inequalities_; }
    const std::vector<ConeBlock>& cones() const { return cones_; }
    const std::vector<std::string>& variable_names() const { return names_; }
    int variable_index(const std::string& name) const;  // -1 if absent

    void validate() const;  // index ranges, cone shapes

  private:
    std::vector<double> obj_;
    double obj_constant_ = 0.0;
    std::vector<std::string> names_;
    std::vector<LinearExpr> equalities_;
    std::vector<LinearExpr> inequalities_;
    std::vector<ConeBlock> cones_;
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(SolveStatus s);

struct SolverStats {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    double relative_gap = 0.0;
    bool reduced_accuracy = false;
};

struct SolveResult {
    SolveStatus status = SolveStatus::numerical_failure;
    Eigen::VectorXd x;       // primal point in program variables (valid when optimal)
    double objective = 0.0;  // objective' x
    SolverStats stats;

    double value(int var) const { return x(var); }
};

struct SolverSettings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    // acceptance thresholds when the iteration stalls before full accuracy
    double feastol_reduced = 1e-6;
    double abstol_reduced = 1e-6;
    double reltol_reduced = 1e-6;
    int max_iterations = 100;
};

// Primal-dual interior-point solve over the nonnegative orthant and
// second-order cones (homogeneous self-dual embedding, Nesterov-Todd
// scaling, Mehrotra predictor-corrector).
SolveResult solve(const ConicProgram& prog, const SolverSettings& settings = {});

/*
 * Exact solver for the bipartite transportation problem
 *
 *   min  sum_ij cost(i,j) flow(i,j)
 *   s.t. sum_j flow(i,j) = supply(i),  sum_i flow(i,j) = demand(j),  flow >= 0
 *
 * by the transportation simplex (spanning-tree basis, MODI pricing).
 * Requires sum(supply) == sum(demand) within 1e-9 and positive masses.
 * Returns the optimal cost; terminates at an exact vertex solution.
 */
double transportation_lp(const Eigen::VectorXd& supply,
                         const Eigen::VectorXd& demand,
                         const Eigen::MatrixXd& cost);

}  // namespace drmpc
