#include "drmpc/conic.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

namespace drmpc {

namespace {

struct BasisArc {
    int i, j;  // source i, sink j
    double flow;
};

// duals via tree propagation: u_i + v_j = cost(i,j) on every basic arc
void compute_duals(const std::vector<BasisArc>& basis, const Eigen::MatrixXd& cost,
                   int M, int N, std::vector<double>& u, std::vector<double>& v) {
    const int nodes = M + N;
    std::vector<std::vector<int>> adj(nodes);
    for (int a = 0; a < static_cast<int>(basis.size()); ++a) {
        adj[basis[a].i].push_back(a);
        adj[M + basis[a].j].push_back(a);
    }
    std::vector<char> known(nodes, 0);
    u.assign(M, 0.0);
    v.assign(N, 0.0);
    std::queue<int> queue;
    queue.push(0);
    known[0] = 1;
    while (!queue.empty()) {
        const int node = queue.front();
        queue.pop();
        for (int a : adj[node]) {
            const int src = basis[a].i;
            const int snk = M + basis[a].j;
            const int other = (node == src) ? snk : src;
            if (known[other]) continue;
            if (other == snk)
                v[basis[a].j] = cost(basis[a].i, basis[a].j) - u[basis[a].i];
            else
                u[basis[a].i] = cost(basis[a].i, basis[a].j) - v[basis[a].j];
            known[other] = 1;
            queue.push(other);
        }
    }
}

// path between two nodes in the basis tree, as a list of arc ids
std::vector<int> tree_path(const std::vector<BasisArc>& basis, int M, int N, int from,
                           int to) {
    const int nodes = M + N;
    std::vector<std::vector<int>> adj(nodes);
    for (int a = 0; a < static_cast<int>(basis.size()); ++a) {
        adj[basis[a].i].push_back(a);
        adj[M + basis[a].j].push_back(a);
    }
    std::vector<int> parent_arc(nodes, -1);
    std::vector<int> parent_node(nodes, -1);
    std::vector<char> seen(nodes, 0);
    std::queue<int> queue;
    queue.push(from);
    seen[from] = 1;
    while (!queue.empty()) {
        const int node = queue.front();
        queue.pop();
        if (node == to) break;
        for (int a : adj[node]) {
            const int src = basis[a].i;
            const int snk = M + basis[a].j;
            const int other = (node == src) ? snk : src;
            if (seen[other]) continue;
            seen[other] = 1;
            parent_arc[other] = a;
            parent_node[other] = node;
            queue.push(other);
        }
    }
    std::vector<int> path;
    for (int node = to; node != from; node = parent_node[node])
        path.push_back(parent_arc[node]);
    return path;  // ordered from `to` back to `from`
}

}  // namespace

double transportation_lp(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                         const Eigen::MatrixXd& cost) {
    const int M = static_cast<int>(supply.size());
    const int N = static_cast<int>(demand.size());
    if (M == 0 || N == 0) throw std::invalid_argument("transportation: empty sides");
    if (cost.rows() != M || cost.cols() != N)
        throw std::invalid_argument("transportation: cost shape mismatch");
    if ((supply.array() <= 0).any() || (demand.array() <= 0).any())
        throw std::invalid_argument("transportation: masses must be positive");
    if (std::fabs(supply.sum() - demand.sum()) > 1e-9)
        throw std::invalid_argument("transportation: unbalanced masses");

    // northwest-corner start: spanning tree with exactly M+N-1 basic arcs
    std::vector<BasisArc> basis;
    basis.reserve(M + N - 1);
    {
        Eigen::VectorXd ra = supply, rb = demand;
        int i = 0, j = 0;
        while (true) {
            const double f = std::min(ra(i), rb(j));
            basis.push_back({i, j, std::max(f, 0.0)});
            ra(i) -= f;
            rb(j) -= f;
            if (i == M - 1 && j == N - 1) break;
            const bool advance_i = i < M - 1 && (j == N - 1 || ra(i) <= rb(j));
            if (advance_i)
                ++i;
            else
                ++j;
        }
    }

    const double tol = 1e-12 * (1.0 + cost.cwiseAbs().maxCoeff());
    std::vector<double> u, v;
    std::vector<char> is_basic(static_cast<size_t>(M) * N, 0);
    auto rebuild_basic_flags = [&] {
        std::fill(is_basic.begin(), is_basic.end(), 0);
        for (const auto& a : basis) is_basic[static_cast<size_t>(a.i) * N + a.j] = 1;
    };
    rebuild_basic_flags();

    const long max_iters = 200L * (M + N) * (M + N) + 1000;
    int consecutive_degenerate = 0;
    bool bland = false;

    for (long iter = 0; iter < max_iters; ++iter) {
        compute_duals(basis, cost, M, N, u, v);

        // entering arc: most negative reduced cost (Bland's rule when stalled)
        int ei = -1, ej = -1;
        double best_rc = -tol;
        for (int i = 0; i < M && !(bland && ei >= 0); ++i) {
            for (int j = 0; j < N; ++j) {
                if (is_basic[static_cast<size_t>(i) * N + j]) continue;
                const double rc = cost(i, j) - u[i] - v[j];
                if (rc < best_rc) {
                    best_rc = rc;
                    ei = i;
                    ej = j;
                    if (bland) break;
                }
            }
        }
        if (ei < 0) break;  // optimal

        // cycle: entering arc plus tree path; signs alternate from the sink end
        std::vector<int> path = tree_path(basis, M, N, ei, M + ej);
        double theta = std::numeric_limits<double>::infinity();
        int leaving = -1;
        int sign = -1;
        for (int a : path) {
            if (sign < 0) {
                const double f = basis[a].flow;
                if (f < theta - 1e-18 ||
                    (leaving >= 0 && f <= theta &&
                     (basis[a].i < basis[leaving].i ||
                      (basis[a].i == basis[leaving].i && basis[a].j < basis[leaving].j)))) {
                    theta = std::min(theta, f);
                    leaving = a;
                }
            }
            sign = -sign;
        }
        if (leaving < 0) throw std::runtime_error("transportation: no leaving arc");

        sign = -1;
        for (int a : path) {
            basis[a].flow = std::max(basis[a].flow + sign * theta, 0.0);
            sign = -sign;
        }
        is_basic[static_cast<size_t>(basis[leaving].i) * N + basis[leaving].j] = 0;
        is_basic[static_cast<size_t>(ei) * N + ej] = 1;
        basis[leaving] = {ei, ej, theta};

        if (theta <= 1e-15) {
            if (++consecutive_degenerate > 2 * (M + N) + 10) bland = true;
        } else {
            consecutive_degenerate = 0;
            bland = false;
        }
        if (iter == max_iters - 1)
            throw std::runtime_error("transportation: simplex failed to converge");
    }

    double total = 0.0;
    for (const auto& a : basis) total += a.flow * cost(a.i, a.j);
    return total;
}

}  // namespace drmpc
