#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace drmpc {

// Per-step sampling description for disturbances, inputs and initial states.
// Every coordinate is drawn independently with the given scale.
struct DisturbanceSpec {
    enum class Kind { zero, gaussian, uniform_box };

    Kind kind = Kind::zero;
    double scale = 0.0;  // gaussian: stddev, uniform_box: half width

    static DisturbanceSpec zero() { return {Kind::zero, 0.0}; }
    static DisturbanceSpec gaussian(double stddev) { return {Kind::gaussian, stddev}; }
    static DisturbanceSpec uniform_box(double half_width) {
        return {Kind::uniform_box, half_width};
    }

    Eigen::VectorXd sample(int dim, std::mt19937_64& rng) const;
    std::string describe() const;  // e.g. "gaussian:0.03"
    static DisturbanceSpec parse(const std::string& text);
};

struct LtiSystem {
    Eigen::MatrixXd A;     // n x n
    Eigen::MatrixXd B;     // n x m
    DisturbanceSpec noise;  // per-step w_k

    int state_dim() const { return static_cast<int>(A.rows()); }
    int input_dim() const { return static_cast<int>(B.cols()); }
    void validate() const;
};

/*
 * T-step stacked form of the dynamics: with z = (x0, u_0..u_{T-1}) and
 * w = (w_0..w_{T-1}), the state stack y = (x_1..x_T) satisfies
 * y = L z + H w. L has block-causal structure (block row r holds
 * A^{r+1}, A^r B, ..., B, 0, ...); H is block lower triangular with
 * identity diagonal blocks.
 */
struct LiftedDynamics {
    Eigen::MatrixXd L;  // nT x (n + mT)
    Eigen::MatrixXd H;  // nT x nT
    int n = 0, m = 0, T = 0;
};

struct TrajectoryRecord {
    Eigen::VectorXd z;  // (x0, u_0..u_{T-1})
    Eigen::VectorXd y;  // (x_1..x_T)
};

struct TrajectoryDataset {
    std::vector<TrajectoryRecord> records;
    int n = 0, m = 0, T = 0;
    std::uint64_t seed = 0;  // generation seed, 0 when loaded without one
    // sampling descriptors carried into the file header block
    std::string noise_desc = "zero", input_desc = "zero", init_desc = "zero";

    int size() const { return static_cast<int>(records.size()); }
    void validate() const;
};

LiftedDynamics build_lifted(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int T);

// exact recursion x_{k+1} = A x_k + B u_k + w_k; returns (x_1..x_T)
std::vector<Eigen::VectorXd> simulate_trajectory(const LtiSystem& sys,
                                                 const Eigen::VectorXd& x0,
                                                 const std::vector<Eigen::VectorXd>& u,
                                                 const std::vector<Eigen::VectorXd>& w);

/*
 * N independent T-step trajectories. Record i is drawn from its own RNG
 * stream derived from (seed, i), so growing N extends a dataset without
 * disturbing earlier records. Draw order within a record: x0, u_0..u_{T-1},
 * w_0..w_{T-1}.
 */
TrajectoryDataset generate_dataset(const LtiSystem& sys, int N, int T,
                                   const DisturbanceSpec& input_spec,
                                   const DisturbanceSpec& init_spec,
                                   std::uint64_t seed);

// the per-record stream used by generate_dataset; exposed for closed-loop
// noise draws that must stay aligned with dataset generation
std::mt19937_64 record_stream(std::uint64_t seed, std::uint64_t record_index);

}  // namespace drmpc
