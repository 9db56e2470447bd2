#include "drmpc/conic.hpp"

#include <stdexcept>

namespace drmpc {

double LinearExpr::evaluate(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& [idx, coeff] : terms) v += coeff * x(idx);
    return v;
}

int ConicProgram::add_variable(std::string name, double objective_coeff) {
    names_.push_back(std::move(name));
    obj_.push_back(objective_coeff);
    return static_cast<int>(obj_.size()) - 1;
}

void ConicProgram::add_equality(LinearExpr expr) {
    equalities_.push_back(std::move(expr));
}

void ConicProgram::add_inequality(LinearExpr expr) {
    inequalities_.push_back(std::move(expr));
}

void ConicProgram::add_soc(int bound_var, std::vector<LinearExpr> arg) {
    if (arg.empty()) throw std::invalid_argument("conic: empty cone argument");
    cones_.push_back(ConeBlock{bound_var, std::move(arg)});
}

void ConicProgram::set_objective(int var, double coeff) {
    obj_.at(var) = coeff;
}

int ConicProgram::variable_index(const std::string& name) const {
    for (int i = 0; i < static_cast<int>(names_.size()); ++i)
        if (names_[i] == name) return i;
    return -1;
}

void ConicProgram::validate() const {
    const int n = num_variables();
    auto check_expr = [n](const LinearExpr& e) {
        for (const auto& [idx, coeff] : e.terms) {
            (void)coeff;
            if (idx < 0 || idx >= n)
                throw std::out_of_range("conic: variable index out of range");
        }
    };
    for (const auto& e : equalities_) check_expr(e);
    for (const auto& e : inequalities_) check_expr(e);
    for (const auto& c : cones_) {
        if (c.bound_var < 0 || c.bound_var >= n)
            throw std::out_of_range("conic: cone bound variable out of range");
        for (const auto& e : c.arg) check_expr(e);
    }
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

}  // namespace drmpc
