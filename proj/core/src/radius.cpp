#include "drmpc/radius.hpp"

#include "drmpc/conic.hpp"

#include <cmath>
#include <stdexcept>

namespace drmpc {

void AmbiguityRadius::validate() const {
    if (!(eps1 >= 0) || !(eps2 >= 0) || !std::isfinite(eps1) || !std::isfinite(eps2))
        throw std::invalid_argument("radius: eps1, eps2 must be nonnegative and finite");
}

void GuaranteeConstants::validate() const {
    if (!(alpha > 0 && alpha < 1))
        throw std::invalid_argument("guarantee: alpha must be in (0,1)");
    if (!(c1 > 0) || !(c2 > 0))
        throw std::invalid_argument("guarantee: c1, c2 must be positive");
    if (!(a > 1)) throw std::invalid_argument("guarantee: a > 1 required");
    if (!(b > 0)) throw std::invalid_argument("guarantee: b > 0 required");
    if (nT <= 2) throw std::invalid_argument("guarantee: nT > 2 required");
    if (N < 1) throw std::invalid_argument("guarantee: N >= 1 required");
    if (!gamma_of_alpha) throw std::invalid_argument("guarantee: gamma function missing");
}

AmbiguityRadius theoretical_radius(const GuaranteeConstants& k) {
    k.validate();
    AmbiguityRadius radius;
    radius.eps1 = k.gamma_of_alpha(k.alpha / 2.0);
    if (!(radius.eps1 >= 0))
        throw std::invalid_argument("guarantee: gamma must be nonnegative");

    const double log_term = std::log(k.c1 * 2.0 / k.alpha);
    const double base = log_term / (k.c2 * k.N);
    const bool small_ball = static_cast<double>(k.N) >= log_term / k.c2;  // base <= 1
    radius.eps2 = std::pow(base, small_ball ? 1.0 / k.nT : 1.0 / k.a);
    radius.validate();
    return radius;
}

std::pair<double, double> lad_fit_nonneg(const std::vector<double>& V,
                                         const std::vector<double>& E) {
    if (V.empty() || V.size() != E.size())
        throw std::invalid_argument("lad_fit_nonneg: need equal-length nonempty inputs");
    const int L = static_cast<int>(V.size());

    // min sum(p_l + q_l) s.t. eps1 V_l + eps2 - E_l = p_l - q_l, all vars >= 0
    ConicProgram prog;
    const int eps1 = prog.add_variable("eps1");
    const int eps2 = prog.add_variable("eps2");
    std::vector<int> pos(L), neg(L);
    for (int l = 0; l < L; ++l) {
        pos[l] = prog.add_variable("p" + std::to_string(l), 1.0);
        neg[l] = prog.add_variable("q" + std::to_string(l), 1.0);
    }
    for (int l = 0; l < L; ++l) {
        LinearExpr eq;
        eq.add(eps1, V[l]).add(eps2, 1.0).add(pos[l], -1.0).add(neg[l], 1.0);
        eq.constant = -E[l];
        prog.add_equality(std::move(eq));
    }
    auto nonneg = [&prog](int var) {
        LinearExpr ineq;
        ineq.add(var, -1.0);
        prog.add_inequality(std::move(ineq));
    };
    nonneg(eps1);
    nonneg(eps2);
    for (int l = 0; l < L; ++l) {
        nonneg(pos[l]);
        nonneg(neg[l]);
    }

    const SolveResult result = solve(prog);
    if (result.status != SolveStatus::optimal)
        throw std::runtime_error(std::string("lad_fit_nonneg: solver returned ") +
                                 to_string(result.status));
    return {std::max(result.value(eps1), 0.0), std::max(result.value(eps2), 0.0)};
}

LooRadiusResult loo_radius(const TrajectoryDataset& data) {
    data.validate();
    const int N = data.size();
    if (N < 3) throw std::invalid_argument("loo_radius: N >= 3 required");

    LooRadiusResult result;
    result.diagnostics.V.resize(N);
    result.diagnostics.E.resize(N);
    result.L_hat_avg =
        Eigen::MatrixXd::Zero(data.n * data.T, data.n + data.m * data.T);

    for (int held_out = 0; held_out < N; ++held_out) {
        TrajectoryDataset rest;
        rest.n = data.n;
        rest.m = data.m;
        rest.T = data.T;
        rest.records.reserve(N - 1);
        for (int i = 0; i < N; ++i)
            if (i != held_out) rest.records.push_back(data.records[i]);

        MultiStepPredictor fit;
        try {
            fit = fit_multistep_ls(rest, /*enforce_causal=*/true);
        } catch (const singular_fit_error& err) {
            throw singular_fit_error(
                err.block_row(), std::string(err.what()) + " (leave-one-out index " +
                                     std::to_string(held_out) + ")");
        }
        result.L_hat_avg += fit.L_hat;

        const auto residuals = compute_residuals(fit.L_hat, data);  // all N records
        const auto& z_held = data.records[held_out].z;
        const auto& y_held = data.records[held_out].y;
        const Eigen::VectorXd base = fit.L_hat * z_held;

        double v_sum = 0.0, e_sum = 0.0;
        for (int i = 0; i < N; ++i) {
            if (i == held_out) continue;
            v_sum += (z_held - data.records[i].z).norm();
            e_sum += (y_held - (base + residuals[i])).norm();
        }
        result.diagnostics.V(held_out) = v_sum / (N - 1);
        result.diagnostics.E(held_out) = e_sum / (static_cast<double>(N) * N - N);
    }

    result.L_hat_avg /= N;
    const std::vector<double> V(result.diagnostics.V.data(),
                                result.diagnostics.V.data() + N);
    const std::vector<double> E(result.diagnostics.E.data(),
                                result.diagnostics.E.data() + N);
    const auto [eps1, eps2] = lad_fit_nonneg(V, E);
    result.radius = AmbiguityRadius{eps1, eps2};
    return result;
}

}  // namespace drmpc
