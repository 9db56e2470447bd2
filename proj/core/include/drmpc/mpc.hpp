#pragma once

#include "drmpc/dro.hpp"
#include "drmpc/lifting.hpp"
#include "drmpc/radius.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace drmpc {

enum class RadiusSource { grid_value, algorithm1, theoretical, zero };

const char* to_string(RadiusSource s);
RadiusSource radius_source_from_string(const std::string& s);

// elementwise state bound checked on realized closed-loop states
struct StateBound {
    int coord = 0;
    double bound = 0.0;
    bool upper = true;  // upper: x(coord) <= bound, else x(coord) >= bound
};

struct ExperimentConfig {
    LtiSystem system;
    int T = 5;
    DisturbanceSpec input_spec = DisturbanceSpec::gaussian(0.5);
    DisturbanceSpec init_spec = DisturbanceSpec::gaussian(0.5);
    std::uint64_t dataset_seed = 1;
    std::uint64_t noise_seed = 1;
    int N = 10;
    std::vector<int> N_list = {10, 20, 30, 40};
    int repetitions = 50;

    double beta = 0.2;
    double slack_weight = 1e6;
    int horizon = 30;
    Eigen::VectorXd x0;  // empty: defaults to (0.9, 0.9, ...) truncated to n
    double tol_v = 1e-9;

    int track_coord = 0;
    double track_ref = 1.0;
    std::vector<StateBound> state_bounds = {{0, 1.0, true}, {1, 0.0, false}};

    RadiusSource radius_source = RadiusSource::algorithm1;
    AmbiguityRadius fixed_radius;      // used by grid_value
    GuaranteeConstants guarantee;      // used by theoretical
    bool use_loo_average_predictor = true;  // predictor choice under algorithm1

    InputBounds input_bounds;
    SolverSettings solver;
    int threads = 0;  // 0: hardware concurrency

    std::vector<double> grid_eps1 = {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    std::vector<double> grid_eps2 = {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};

    void validate() const;
    Eigen::VectorXd initial_state() const;
};

struct StepRecord {
    Eigen::VectorXd state;  // measured state before solving
    Eigen::VectorXd input;  // applied first input
    SolveStatus status = SolveStatus::numerical_failure;
    double objective = 0.0;
    double slack = 0.0;
    double stage_cost = 0.0;  // realized |x(track)_{tau+1} - ref|
    std::vector<std::uint8_t> bound_violated;
    bool fallback = false;  // zero input applied after solver failure

    bool violated() const;
};

struct ClosedLoopRecord {
    std::vector<StepRecord> steps;
    double total_cost = 0.0;       // sum of realized stage costs, slack excluded
    int violation_count = 0;       // steps whose realized state violates any bound
    int solver_failures = 0;
    double slack_total = 0.0;

    void recompute_aggregates();
};

SeparableL1Cost make_tracking_cost(const ExperimentConfig& cfg);
PwaFunction make_state_constraint(const ExperimentConfig& cfg);
FhocSpec make_controller_spec(const ExperimentConfig& cfg,
                              MultiStepPredictor predictor,
                              const AmbiguityRadius& radius);

// predictor and radius resolved according to cfg.radius_source
struct ControllerSetup {
    MultiStepPredictor predictor;
    AmbiguityRadius radius;
};
ControllerSetup prepare_controller(const ExperimentConfig& cfg,
                                   const TrajectoryDataset& data);

/*
 * Receding-horizon loop against the true system: at each step solve the
 * FHOC program at the measured state, apply the first input, draw a fresh
 * disturbance. Solver failures are recorded and replaced by zero input; the
 * run always completes. The disturbance sequence is a pure function of
 * noise_seed (stream per step), so runs with different controllers share
 * the realization.
 */
ClosedLoopRecord run_closed_loop(const ExperimentConfig& cfg, const FhocSpec& controller,
                                 std::uint64_t noise_seed);

struct SweepRow {
    double eps1 = 0.0, eps2 = 0.0;
    double cost = 0.0;
    int violations = 0;
    int solver_failures = 0;
    double slack_total = 0.0;
};

// one closed-loop run per grid cell, all sharing the dataset and the noise
// realization fixed by cfg seeds; predictor is the full-data causal fit
std::vector<SweepRow> sweep_radius(const ExperimentConfig& cfg,
                                   const std::vector<std::pair<double, double>>& grid);

struct CompareRow {
    int N = 0;
    int repetition = 0;
    std::string method;  // "dr" or "saa"
    double cost = 0.0;
    int violations = 0;
    int solver_failures = 0;
    std::uint64_t dataset_seed = 0;
    std::uint64_t noise_seed = 0;
};

/*
 * Paired comparison of the data-driven-radius controller against the
 * zero-radius baseline: per (N, repetition), both methods share a fresh
 * dataset seed and noise seed. DR uses the leave-one-out radius (and, by
 * default, the averaged leave-one-out predictor); SAA uses the full-data
 * fit with zero radius.
 */
std::vector<CompareRow> compare_saa_dr(const ExperimentConfig& cfg);

// deterministic seed derivation for repetitions and grid cells
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt_a,
                          std::uint64_t salt_b);

}  // namespace drmpc
