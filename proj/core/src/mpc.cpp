#include "drmpc/mpc.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace drmpc {

const char* to_string(RadiusSource s) {
    switch (s) {
        case RadiusSource::grid_value: return "grid";
        case RadiusSource::algorithm1: return "algorithm1";
        case RadiusSource::theoretical: return "theoretical";
        case RadiusSource::zero: return "zero";
    }
    return "zero";
}

RadiusSource radius_source_from_string(const std::string& s) {
    if (s == "grid") return RadiusSource::grid_value;
    if (s == "algorithm1") return RadiusSource::algorithm1;
    if (s == "theoretical") return RadiusSource::theoretical;
    if (s == "zero") return RadiusSource::zero;
    throw std::invalid_argument("unknown radius source: " + s);
}

void ExperimentConfig::validate() const {
    system.validate();
    if (T < 1) throw std::invalid_argument("config: T >= 1 required");
    if (horizon < 1) throw std::invalid_argument("config: horizon >= 1 required");
    if (repetitions < 1) throw std::invalid_argument("config: repetitions >= 1 required");
    if (N < 1) throw std::invalid_argument("config: N >= 1 required");
    if (!(beta > 0 && beta < 1)) throw std::invalid_argument("config: beta in (0,1)");
    if (track_coord < 0 || track_coord >= system.state_dim())
        throw std::invalid_argument("config: track coordinate out of range");
    for (const auto& sb : state_bounds)
        if (sb.coord < 0 || sb.coord >= system.state_dim())
            throw std::invalid_argument("config: bound coordinate out of range");
    if (x0.size() != 0 && x0.size() != system.state_dim())
        throw std::invalid_argument("config: x0 dimension mismatch");
}

Eigen::VectorXd ExperimentConfig::initial_state() const {
    if (x0.size() > 0) return x0;
    return Eigen::VectorXd::Constant(system.state_dim(), 0.9);
}

bool StepRecord::violated() const {
    return std::any_of(bound_violated.begin(), bound_violated.end(),
                       [](std::uint8_t v) { return v != 0; });
}

void ClosedLoopRecord::recompute_aggregates() {
    total_cost = 0.0;
    violation_count = 0;
    solver_failures = 0;
    slack_total = 0.0;
    for (const auto& step : steps) {
        total_cost += step.stage_cost;
        if (step.violated()) ++violation_count;
        if (step.fallback) ++solver_failures;
        if (step.status == SolveStatus::optimal) slack_total += step.slack;
    }
}

SeparableL1Cost make_tracking_cost(const ExperimentConfig& cfg) {
    const int n = cfg.system.state_dim();
    SeparableL1Cost cost;
    for (int k = 0; k < cfg.T; ++k) cost.selector.push_back(k * n + cfg.track_coord);
    cost.reference = Eigen::VectorXd::Constant(cfg.T, cfg.track_ref);
    return cost;
}

PwaFunction make_state_constraint(const ExperimentConfig& cfg) {
    const int n = cfg.system.state_dim();
    const int y_dim = n * cfg.T;
    std::vector<PwaPiece> pieces;
    for (const auto& sb : cfg.state_bounds) {
        for (int k = 0; k < cfg.T; ++k) {
            PwaPiece piece;
            piece.a = Eigen::VectorXd::Zero(y_dim);
            piece.a(k * n + sb.coord) = sb.upper ? 1.0 : -1.0;
            piece.c = sb.upper ? -sb.bound : sb.bound;
            pieces.push_back(std::move(piece));
        }
    }
    return PwaFunction(std::move(pieces));
}

FhocSpec make_controller_spec(const ExperimentConfig& cfg, MultiStepPredictor predictor,
                              const AmbiguityRadius& radius) {
    FhocSpec spec;
    spec.predictor = std::move(predictor);
    spec.cost = make_tracking_cost(cfg);
    spec.constraint = make_state_constraint(cfg);
    spec.beta = cfg.beta;
    spec.radius = radius;
    spec.slack_weight = cfg.slack_weight;
    spec.input_bounds = cfg.input_bounds;
    return spec;
}

ControllerSetup prepare_controller(const ExperimentConfig& cfg,
                                   const TrajectoryDataset& data) {
    ControllerSetup setup;
    switch (cfg.radius_source) {
        case RadiusSource::grid_value:
            setup.predictor = fit_multistep_ls(data, true);
            setup.radius = cfg.fixed_radius;
            break;
        case RadiusSource::zero:
            setup.predictor = fit_multistep_ls(data, true);
            setup.radius = AmbiguityRadius{0.0, 0.0};
            break;
        case RadiusSource::theoretical: {
            setup.predictor = fit_multistep_ls(data, true);
            GuaranteeConstants constants = cfg.guarantee;
            constants.nT = data.n * data.T;
            constants.N = data.size();
            setup.radius = theoretical_radius(constants);
            break;
        }
        case RadiusSource::algorithm1: {
            const LooRadiusResult loo = loo_radius(data);
            setup.radius = loo.radius;
            if (cfg.use_loo_average_predictor)
                setup.predictor = make_predictor(loo.L_hat_avg, data, true);
            else
                setup.predictor = fit_multistep_ls(data, true);
            break;
        }
    }
    return setup;
}

ClosedLoopRecord run_closed_loop(const ExperimentConfig& cfg, const FhocSpec& controller,
                                 std::uint64_t noise_seed) {
    cfg.validate();
    controller.validate();
    if (controller.predictor.n != cfg.system.state_dim() ||
        controller.predictor.m != cfg.system.input_dim() ||
        controller.predictor.T != cfg.T)
        throw std::invalid_argument("run_closed_loop: controller dimensions mismatch");

    const int n = cfg.system.state_dim();
    const int m = cfg.system.input_dim();
    ClosedLoopRecord record;
    record.steps.reserve(cfg.horizon);

    Eigen::VectorXd x = cfg.initial_state();
    for (int tau = 0; tau < cfg.horizon; ++tau) {
        StepRecord step;
        step.state = x;

        const FhocProgram prog = build_drmpc(controller, x);
        const FhocSolution sol = solve_fhoc(prog, cfg.solver);
        step.status = sol.status;
        if (sol.status == SolveStatus::optimal) {
            step.input = sol.first_input(prog.layout);
            step.objective = sol.objective;
            step.slack = sol.sigma;
        } else {
            step.input = Eigen::VectorXd::Zero(m);
            step.objective = std::numeric_limits<double>::quiet_NaN();
            step.fallback = true;
        }

        // disturbance stream per step: controllers share the realization
        std::mt19937_64 rng = record_stream(noise_seed, static_cast<std::uint64_t>(tau));
        const Eigen::VectorXd w = cfg.system.noise.sample(n, rng);
        x = cfg.system.A * x + cfg.system.B * step.input + w;

        step.stage_cost = std::fabs(x(cfg.track_coord) - cfg.track_ref);
        step.bound_violated.resize(cfg.state_bounds.size());
        for (size_t bi = 0; bi < cfg.state_bounds.size(); ++bi) {
            const auto& sb = cfg.state_bounds[bi];
            const bool bad = sb.upper ? x(sb.coord) > sb.bound + cfg.tol_v
                                      : x(sb.coord) < sb.bound - cfg.tol_v;
            step.bound_violated[bi] = bad ? 1 : 0;
        }
        record.steps.push_back(std::move(step));
    }
    record.recompute_aggregates();
    return record;
}

namespace {

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (count <= 0) return;
    int nthreads = threads > 0 ? threads
                               : static_cast<int>(std::thread::hardware_concurrency());
    nthreads = std::clamp(nthreads, 1, count);
    if (nthreads == 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt_a,
                          std::uint64_t salt_b) {
    // splitmix64 over the concatenated words
    auto mix = [](std::uint64_t v) {
        v += 0x9e3779b97f4a7c15ULL;
        v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
        v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
        return v ^ (v >> 31);
    };
    return mix(mix(mix(base) ^ salt_a) ^ salt_b);
}

std::vector<SweepRow> sweep_radius(const ExperimentConfig& cfg,
                                   const std::vector<std::pair<double, double>>& grid) {
    cfg.validate();
    if (grid.empty()) throw std::invalid_argument("sweep_radius: empty grid");

    const TrajectoryDataset data = generate_dataset(
        cfg.system, cfg.N, cfg.T, cfg.input_spec, cfg.init_spec, cfg.dataset_seed);
    const MultiStepPredictor predictor = fit_multistep_ls(data, true);

    std::vector<SweepRow> rows(grid.size());
    parallel_for(static_cast<int>(grid.size()), cfg.threads, [&](int cell) {
        const auto [eps1, eps2] = grid[cell];
        const FhocSpec spec =
            make_controller_spec(cfg, predictor, AmbiguityRadius{eps1, eps2});
        const ClosedLoopRecord record = run_closed_loop(cfg, spec, cfg.noise_seed);
        rows[cell] = SweepRow{eps1,
                              eps2,
                              record.total_cost,
                              record.violation_count,
                              record.solver_failures,
                              record.slack_total};
    });
    return rows;
}

std::vector<CompareRow> compare_saa_dr(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Task {
        int N, rep;
    };
    std::vector<Task> tasks;
    for (int N : cfg.N_list)
        for (int rep = 0; rep < cfg.repetitions; ++rep) tasks.push_back({N, rep});

    std::vector<std::array<CompareRow, 2>> results(tasks.size());
    parallel_for(static_cast<int>(tasks.size()), cfg.threads, [&](int ti) {
        const auto [N, rep] = tasks[ti];
        const std::uint64_t dataset_seed =
            derive_seed(cfg.dataset_seed, static_cast<std::uint64_t>(N),
                        static_cast<std::uint64_t>(rep));
        const std::uint64_t noise_seed =
            derive_seed(cfg.noise_seed, static_cast<std::uint64_t>(N),
                        static_cast<std::uint64_t>(rep) + 0x10000ULL);
        const TrajectoryDataset data = generate_dataset(
            cfg.system, N, cfg.T, cfg.input_spec, cfg.init_spec, dataset_seed);

        ExperimentConfig local = cfg;
        local.N = N;
        local.radius_source = RadiusSource::algorithm1;
        const ControllerSetup dr = prepare_controller(local, data);
        const ClosedLoopRecord dr_record = run_closed_loop(
            cfg, make_controller_spec(cfg, dr.predictor, dr.radius), noise_seed);

        const MultiStepPredictor saa_predictor = fit_multistep_ls(data, true);
        const ClosedLoopRecord saa_record = run_closed_loop(
            cfg, make_controller_spec(cfg, saa_predictor, AmbiguityRadius{0.0, 0.0}),
            noise_seed);

        results[ti][0] = CompareRow{N,
                                    rep,
                                    "dr",
                                    dr_record.total_cost,
                                    dr_record.violation_count,
                                    dr_record.solver_failures,
                                    dataset_seed,
                                    noise_seed};
        results[ti][1] = CompareRow{N,
                                    rep,
                                    "saa",
                                    saa_record.total_cost,
                                    saa_record.violation_count,
                                    saa_record.solver_failures,
                                    dataset_seed,
                                    noise_seed};
    });

    std::vector<CompareRow> rows;
    rows.reserve(2 * tasks.size());
    for (const auto& pair : results) {
        rows.push_back(pair[0]);
        rows.push_back(pair[1]);
    }
    return rows;
}

}  // namespace drmpc
