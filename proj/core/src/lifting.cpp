#include "drmpc/lifting.hpp"

#include <charconv>
#include <stdexcept>

namespace drmpc {

Eigen::VectorXd DisturbanceSpec::sample(int dim, std::mt19937_64& rng) const {
    Eigen::VectorXd v(dim);
    switch (kind) {
        case Kind::zero:
            v.setZero();
            break;
        case Kind::gaussian: {
            std::normal_distribution<double> dist(0.0, scale);
            for (int i = 0; i < dim; ++i) v(i) = dist(rng);
            break;
        }
        case Kind::uniform_box: {
            std::uniform_real_distribution<double> dist(-scale, scale);
            for (int i = 0; i < dim; ++i) v(i) = dist(rng);
            break;
        }
    }
    return v;
}

std::string DisturbanceSpec::describe() const {
    switch (kind) {
        case Kind::zero: return "zero";
        case Kind::gaussian: return "gaussian:" + std::to_string(scale);
        case Kind::uniform_box: return "uniform_box:" + std::to_string(scale);
    }
    return "zero";
}

DisturbanceSpec DisturbanceSpec::parse(const std::string& text) {
    if (text == "zero") return zero();
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
        const std::string kind = text.substr(0, colon);
        const double value = std::stod(text.substr(colon + 1));
        if (kind == "gaussian") return gaussian(value);
        if (kind == "uniform_box") return uniform_box(value);
    }
    throw std::invalid_argument("unknown disturbance spec: " + text);
}

void LtiSystem::validate() const {
    if (A.rows() < 1 || A.rows() != A.cols())
        throw std::invalid_argument("LtiSystem: A must be square, n >= 1");
    if (B.rows() != A.rows() || B.cols() < 1)
        throw std::invalid_argument("LtiSystem: B must be n x m with m >= 1");
}

void TrajectoryDataset::validate() const {
    if (records.empty()) throw std::invalid_argument("dataset: N >= 1 required");
    const int zdim = n + m * T;
    const int ydim = n * T;
    for (const auto& rec : records) {
        if (rec.z.size() != zdim || rec.y.size() != ydim)
            throw std::invalid_argument("dataset: record dimension mismatch");
    }
}

LiftedDynamics build_lifted(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int T) {
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    if (n < 1 || A.cols() != n) throw std::invalid_argument("build_lifted: A must be square");
    if (B.rows() != n || m < 1) throw std::invalid_argument("build_lifted: B must be n x m");
    if (T < 1) throw std::invalid_argument("build_lifted: T >= 1 required");

    // powers[r] = A^r
    std::vector<Eigen::MatrixXd> powers(T + 1);
    powers[0] = Eigen::MatrixXd::Identity(n, n);
    for (int r = 1; r <= T; ++r) powers[r] = A * powers[r - 1];

    LiftedDynamics lifted;
    lifted.n = n;
    lifted.m = m;
    lifted.T = T;
    lifted.L = Eigen::MatrixXd::Zero(n * T, n + m * T);
    lifted.H = Eigen::MatrixXd::Zero(n * T, n * T);
    for (int r = 0; r < T; ++r) {
        lifted.L.block(r * n, 0, n, n) = powers[r + 1];
        for (int c = 0; c <= r; ++c)
            lifted.L.block(r * n, n + c * m, n, m) = powers[r - c] * B;
        for (int c = 0; c <= r; ++c)
            lifted.H.block(r * n, c * n, n, n) = powers[r - c];
    }
    return lifted;
}

std::vector<Eigen::VectorXd> simulate_trajectory(const LtiSystem& sys,
                                                 const Eigen::VectorXd& x0,
                                                 const std::vector<Eigen::VectorXd>& u,
                                                 const std::vector<Eigen::VectorXd>& w) {
    sys.validate();
    if (u.size() != w.size())
        throw std::invalid_argument("simulate_trajectory: u and w length mismatch");
    if (x0.size() != sys.state_dim())
        throw std::invalid_argument("simulate_trajectory: x0 dimension mismatch");

    std::vector<Eigen::VectorXd> states;
    states.reserve(u.size());
    Eigen::VectorXd x = x0;
    for (size_t k = 0; k < u.size(); ++k) {
        if (u[k].size() != sys.input_dim() || w[k].size() != sys.state_dim())
            throw std::invalid_argument("simulate_trajectory: step dimension mismatch");
        x = sys.A * x + sys.B * u[k] + w[k];
        states.push_back(x);
    }
    return states;
}

std::mt19937_64 record_stream(std::uint64_t seed, std::uint64_t record_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(record_index & 0xffffffffu),
                      static_cast<std::uint32_t>(record_index >> 32)};
    return std::mt19937_64(seq);
}

TrajectoryDataset generate_dataset(const LtiSystem& sys, int N, int T,
                                   const DisturbanceSpec& input_spec,
                                   const DisturbanceSpec& init_spec,
                                   std::uint64_t seed) {
    sys.validate();
    if (N < 1) throw std::invalid_argument("generate_dataset: N >= 1 required");
    if (T < 1) throw std::invalid_argument("generate_dataset: T >= 1 required");

    const int n = sys.state_dim();
    const int m = sys.input_dim();

    TrajectoryDataset data;
    data.n = n;
    data.m = m;
    data.T = T;
    data.seed = seed;
    data.noise_desc = sys.noise.describe();
    data.input_desc = input_spec.describe();
    data.init_desc = init_spec.describe();
    data.records.resize(N);

    for (int i = 0; i < N; ++i) {
        std::mt19937_64 rng = record_stream(seed, static_cast<std::uint64_t>(i));
        const Eigen::VectorXd x0 = init_spec.sample(n, rng);
        std::vector<Eigen::VectorXd> u(T), w(T);
        for (int k = 0; k < T; ++k) u[k] = input_spec.sample(m, rng);
        for (int k = 0; k < T; ++k) w[k] = sys.noise.sample(n, rng);

        const auto states = simulate_trajectory(sys, x0, u, w);
        TrajectoryRecord rec;
        rec.z.resize(n + m * T);
        rec.z.head(n) = x0;
        for (int k = 0; k < T; ++k) rec.z.segment(n + k * m, m) = u[k];
        rec.y.resize(n * T);
        for (int k = 0; k < T; ++k) rec.y.segment(k * n, n) = states[k];
        data.records[i] = std::move(rec);
    }
    return data;
}

}  // namespace drmpc
