#pragma once

#include "drmpc/identification.hpp"
#include "drmpc/lifting.hpp"

#include <Eigen/Core>

#include <functional>
#include <utility>
#include <vector>

namespace drmpc {

// decision-dependent ambiguity radius eps(z) = eps1 * mean_i ||z - z_i|| + eps2
struct AmbiguityRadius {
    double eps1 = 0.0;
    double eps2 = 0.0;

    bool is_zero() const { return eps1 == 0.0 && eps2 == 0.0; }
    void validate() const;
};

/*
 * Constants of the finite-sample guarantee. gamma_of_alpha bounds the
 * spectral-norm identification error at a given confidence level; (c1, c2)
 * are the measure-concentration constants; (a, b) are the light-tail
 * exponent and scale. nT > 2 is required by the concentration bound.
 */
struct GuaranteeConstants {
    double alpha = 0.05;
    std::function<double(double)> gamma_of_alpha;
    double c1 = 1.0, c2 = 1.0;
    double a = 2.0, b = 1.0;
    int nT = 0;
    int N = 0;

    void validate() const;
};

/*
 * Radius from the finite-sample guarantee:
 *   eps1 = gamma(alpha/2)
 *   eps2 = (log(2 c1/alpha) / (c2 N))^(1/nT)  when N >= log(2 c1/alpha)/c2,
 *          else the same base with exponent 1/a.
 * The branch condition is N >= log(2 c1/alpha)/c2, equivalently base <= 1,
 * matching the concentration bound's kappa <= 1 regime.
 */
AmbiguityRadius theoretical_radius(const GuaranteeConstants& k);

struct LooDiagnostics {
    Eigen::VectorXd V;  // mean anchor distance per left-out record
    Eigen::VectorXd E;  // transport mismatch per left-out record
};

struct LooRadiusResult {
    Eigen::MatrixXd L_hat_avg;  // average of the leave-one-out fits
    AmbiguityRadius radius;
    LooDiagnostics diagnostics;
};

/*
 * Leave-one-out radius estimate. For each record l: fit the causal
 * least-squares predictor on the other N-1 records, evaluate how far the
 * held-out observation falls from the ensemble prediction at z = z_l
 * (E_l equals the exact 1-Wasserstein distance between the leave-one-out
 * and full prediction ensembles at z_l), then fit eps(z) coefficients by
 * least absolute deviations over the (V_l, E_l) pairs.
 */
LooRadiusResult loo_radius(const TrajectoryDataset& data);

// min over eps1, eps2 >= 0 of sum_l |eps1 V_l + eps2 - E_l|, solved as an
// LP with split residual variables
std::pair<double, double> lad_fit_nonneg(const std::vector<double>& V,
                                         const std::vector<double>& E);

}  // namespace drmpc
