#include "drmpc/dro.hpp"

#include <algorithm>
#include <stdexcept>

namespace drmpc {

void SeparableL1Cost::validate(int y_dim) const {
    if (selector.empty()) throw std::invalid_argument("l1 cost: empty selector");
    if (reference.size() != static_cast<Eigen::Index>(selector.size()))
        throw std::invalid_argument("l1 cost: reference size mismatch");
    for (int idx : selector)
        if (idx < 0 || idx >= y_dim)
            throw std::invalid_argument("l1 cost: selector index out of range");
}

double FhocSpec::cost_lipschitz() const {
    if (std::holds_alternative<SeparableL1Cost>(cost))
        return std::get<SeparableL1Cost>(cost).lipschitz();
    return std::get<PwaFunction>(cost).lipschitz();
}

void FhocSpec::validate() const {
    predictor.validate();
    radius.validate();
    const int y_dim = predictor.n * predictor.T;
    const int z_dim = predictor.n + predictor.m * predictor.T;
    const int u_dim = predictor.m * predictor.T;

    if (std::holds_alternative<SeparableL1Cost>(cost)) {
        std::get<SeparableL1Cost>(cost).validate(y_dim);
    } else {
        const auto& pwa = std::get<PwaFunction>(cost);
        for (const auto& piece : pwa.pieces()) {
            if (piece.a.size() != y_dim)
                throw std::invalid_argument("fhoc: cost piece y-dimension mismatch");
            if (piece.b.size() != 0 && piece.b.size() != z_dim)
                throw std::invalid_argument("fhoc: cost piece z-dimension mismatch");
        }
    }
    if (constraint) {
        if (!(beta > 0 && beta < 1))
            throw std::invalid_argument("fhoc: beta must be in (0,1)");
        for (const auto& piece : constraint->pieces()) {
            if (piece.a.size() != y_dim)
                throw std::invalid_argument("fhoc: constraint piece y-dimension mismatch");
            if (piece.b.size() != 0 && piece.b.size() != z_dim)
                throw std::invalid_argument("fhoc: constraint piece z-dimension mismatch");
        }
    }
    if (slack_weight < 0) throw std::invalid_argument("fhoc: slack_weight >= 0 required");
    if (input_bounds.lower.size() != 0 && input_bounds.lower.size() != u_dim)
        throw std::invalid_argument("fhoc: input lower bound size mismatch");
    if (input_bounds.upper.size() != 0 && input_bounds.upper.size() != u_dim)
        throw std::invalid_argument("fhoc: input upper bound size mismatch");
    if (pinned_inputs && pinned_inputs->size() != u_dim)
        throw std::invalid_argument("fhoc: pinned input size mismatch");
}

namespace {

FhocProgram build_fhoc(const FhocSpec& spec, const Eigen::VectorXd& x0,
                       const AmbiguityRadius& radius) {
    spec.validate();
    const int n = spec.predictor.n;
    const int m = spec.predictor.m;
    const int T = spec.predictor.T;
    const int N = spec.predictor.sample_count();
    const int z_dim = n + m * T;
    if (x0.size() != n) throw std::invalid_argument("fhoc: x0 dimension mismatch");

    const double lam = spec.cost_lipschitz();
    const bool robust = radius.eps1 > 0.0;
    const Eigen::MatrixXd& L = spec.predictor.L_hat;

    FhocProgram built;
    ConicProgram& prog = built.program;
    FhocLayout& layout = built.layout;
    layout.n = n;
    layout.m = m;
    layout.T = T;
    layout.N = N;
    layout.z_dim = z_dim;

    layout.z_offset = prog.add_variable("z0");
    for (int j = 1; j < z_dim; ++j) prog.add_variable("z" + std::to_string(j));
    auto zvar = [&](int j) { return layout.z_offset + j; };

    for (int i = 0; i < N; ++i)
        layout.s.push_back(prog.add_variable("s" + std::to_string(i), 1.0 / N));

    // constant robust offset lam * eps2 enters the objective directly
    prog.set_objective_constant(lam * radius.eps2);

    // initial state pinned to the measurement
    for (int j = 0; j < n; ++j) {
        LinearExpr eq;
        eq.add(zvar(j), 1.0);
        eq.constant = -x0(j);
        prog.add_equality(std::move(eq));
    }
    if (spec.pinned_inputs) {
        for (int k = 0; k < m * T; ++k) {
            LinearExpr eq;
            eq.add(zvar(n + k), 1.0);
            eq.constant = -(*spec.pinned_inputs)(k);
            prog.add_equality(std::move(eq));
        }
    }
    if (spec.input_bounds.lower.size() > 0) {
        for (int k = 0; k < m * T; ++k) {
            LinearExpr ineq;  // lower_k - u_k <= 0
            ineq.add(zvar(n + k), -1.0);
            ineq.constant = spec.input_bounds.lower(k);
            prog.add_inequality(std::move(ineq));
        }
    }
    if (spec.input_bounds.upper.size() > 0) {
        for (int k = 0; k < m * T; ++k) {
            LinearExpr ineq;  // u_k - upper_k <= 0
            ineq.add(zvar(n + k), 1.0);
            ineq.constant = -spec.input_bounds.upper(k);
            prog.add_inequality(std::move(ineq));
        }
    }

    // adds coeff * (Lhat z + xi_i)_row to expr
    auto add_prediction_row = [&](LinearExpr& expr, int row, double coeff, int sample) {
        for (int j = 0; j < z_dim; ++j) {
            const double v = L(row, j);
            if (v != 0.0) expr.add(zvar(j), coeff * v);
        }
        expr.constant += coeff * spec.predictor.residuals[sample](row);
    };

    if (std::holds_alternative<SeparableL1Cost>(spec.cost)) {
        const auto& cost = std::get<SeparableL1Cost>(spec.cost);
        const int P = static_cast<int>(cost.selector.size());
        for (int i = 0; i < N; ++i) {
            LinearExpr sum_eq;  // sum_p v_ip - s_i = 0
            sum_eq.add(layout.s[i], -1.0);
            for (int p = 0; p < P; ++p) {
                const int v = prog.add_variable("v" + std::to_string(i) + "_" +
                                                std::to_string(p));
                sum_eq.add(v, 1.0);
                const int row = cost.selector[p];
                LinearExpr above;  // (Lhat z + xi_i)_row - ref_p <= v_ip
                add_prediction_row(above, row, 1.0, i);
                above.constant -= cost.reference(p);
                above.add(v, -1.0);
                prog.add_inequality(std::move(above));
                LinearExpr below;  // ref_p - (Lhat z + xi_i)_row <= v_ip
                add_prediction_row(below, row, -1.0, i);
                below.constant += cost.reference(p);
                below.add(v, -1.0);
                prog.add_inequality(std::move(below));
            }
            prog.add_equality(std::move(sum_eq));
        }
    } else {
        const auto& cost = std::get<PwaFunction>(spec.cost);
        for (int i = 0; i < N; ++i) {
            for (const auto& piece : cost.pieces()) {
                LinearExpr ineq;  // a_j (Lhat z + xi_i) + b_j z + c_j - s_i <= 0
                for (int row = 0; row < n * T; ++row)
                    if (piece.a(row) != 0.0) add_prediction_row(ineq, row, piece.a(row), i);
                if (piece.b.size() > 0)
                    for (int j = 0; j < z_dim; ++j)
                        if (piece.b(j) != 0.0) ineq.add(zvar(j), piece.b(j));
                ineq.constant += piece.c;
                ineq.add(layout.s[i], -1.0);
                prog.add_inequality(std::move(ineq));
            }
        }
    }

    if (spec.constraint) {
        const double theta = spec.constraint->lipschitz();
        layout.t = prog.add_variable("t");
        for (int i = 0; i < N; ++i)
            layout.q.push_back(prog.add_variable("q" + std::to_string(i)));
        if (spec.slack_weight > 0)
            layout.sigma = prog.add_variable("sigma", spec.slack_weight);

        if (robust) {
            for (int i = 0; i < N; ++i)
                layout.r.push_back(prog.add_variable("r" + std::to_string(i),
                                                     lam * radius.eps1 / N));
        }

        // th (eps1 mean_i r_i + eps2) + mean_i q_i - t beta - sigma <= 0
        LinearExpr agg;
        agg.constant = theta * radius.eps2;
        for (int i = 0; i < N; ++i) agg.add(layout.q[i], 1.0 / N);
        if (robust)
            for (int i = 0; i < N; ++i) agg.add(layout.r[i], theta * radius.eps1 / N);
        agg.add(layout.t, -spec.beta);
        if (layout.sigma >= 0) agg.add(layout.sigma, -1.0);
        prog.add_inequality(std::move(agg));

        for (int i = 0; i < N; ++i) {
            for (const auto& piece : spec.constraint->pieces()) {
                LinearExpr ineq;  // d_k (Lhat z + xi_i) + e_k z + f_k + t - q_i <= 0
                for (int row = 0; row < n * T; ++row)
                    if (piece.a(row) != 0.0) add_prediction_row(ineq, row, piece.a(row), i);
                if (piece.b.size() > 0)
                    for (int j = 0; j < z_dim; ++j)
                        if (piece.b(j) != 0.0) ineq.add(zvar(j), piece.b(j));
                ineq.constant += piece.c;
                ineq.add(layout.t, 1.0);
                ineq.add(layout.q[i], -1.0);
                prog.add_inequality(std::move(ineq));
            }
            LinearExpr nonneg;  // q_i >= 0
            nonneg.add(layout.q[i], -1.0);
            prog.add_inequality(std::move(nonneg));
        }
        if (layout.sigma >= 0) {
            LinearExpr nonneg;  // sigma >= 0
            nonneg.add(layout.sigma, -1.0);
            prog.add_inequality(std::move(nonneg));
        }
    } else if (robust) {
        for (int i = 0; i < N; ++i)
            layout.r.push_back(
                prog.add_variable("r" + std::to_string(i), lam * radius.eps1 / N));
    }

    // r_i >= || z - z_i ||
    for (int i = 0; i < static_cast<int>(layout.r.size()); ++i) {
        std::vector<LinearExpr> arg;
        arg.reserve(z_dim);
        const auto& anchor = spec.predictor.anchors[i];
        for (int j = 0; j < z_dim; ++j) {
            LinearExpr row;
            row.add(zvar(j), 1.0);
            row.constant = -anchor(j);
            arg.push_back(std::move(row));
        }
        prog.add_soc(layout.r[i], std::move(arg));
    }

    return built;
}

}  // namespace

FhocProgram build_drmpc(const FhocSpec& spec, const Eigen::VectorXd& x0) {
    return build_fhoc(spec, x0, spec.radius);
}

FhocProgram build_saa(const FhocSpec& spec, const Eigen::VectorXd& x0) {
    return build_fhoc(spec, x0, AmbiguityRadius{0.0, 0.0});
}

Eigen::VectorXd FhocSolution::first_input(const FhocLayout& layout) const {
    return z.segment(layout.n, layout.m);
}

FhocSolution solve_fhoc(const FhocProgram& prog, const SolverSettings& settings) {
    const SolveResult result = solve(prog.program, settings);
    const FhocLayout& layout = prog.layout;

    FhocSolution sol;
    sol.status = result.status;
    sol.stats = result.stats;
    sol.objective = result.objective;
    if (result.status != SolveStatus::optimal) return sol;

    sol.z = result.x.segment(layout.z_offset, layout.z_dim);
    sol.s.resize(layout.N);
    for (int i = 0; i < layout.N; ++i) sol.s(i) = result.value(layout.s[i]);
    if (layout.t >= 0) {
        sol.t = result.value(layout.t);
        sol.q.resize(layout.N);
        for (int i = 0; i < layout.N; ++i) sol.q(i) = result.value(layout.q[i]);
    }
    if (layout.sigma >= 0) sol.sigma = result.value(layout.sigma);
    if (!layout.r.empty()) {
        sol.r.resize(static_cast<Eigen::Index>(layout.r.size()));
        for (size_t i = 0; i < layout.r.size(); ++i)
            sol.r(static_cast<Eigen::Index>(i)) = result.value(layout.r[i]);
    }
    return sol;
}

double evaluate_worst_case_cvar(const PwaFunction& g, const DiscreteDistribution& P,
                                const Eigen::VectorXd& z, double eps, double beta) {
    P.validate();
    if (eps < 0) throw std::invalid_argument("worst_case_cvar: eps >= 0 required");
    if (!(beta > 0 && beta < 1))
        throw std::invalid_argument("worst_case_cvar: beta must be in (0,1)");

    std::vector<double> values, weights;
    values.reserve(P.atoms.size());
    weights.reserve(P.atoms.size());
    for (size_t i = 0; i < P.atoms.size(); ++i) {
        values.push_back(g.value(P.atoms[i], z));
        weights.push_back(P.weights(static_cast<Eigen::Index>(i)));
    }
    return g.lipschitz() * eps / beta + cvar_empirical(values, weights, beta);
}

}  // namespace drmpc
