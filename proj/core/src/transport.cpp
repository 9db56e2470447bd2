#include "drmpc/transport.hpp"

#include "drmpc/conic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace drmpc {

PwaFunction::PwaFunction(std::vector<PwaPiece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw std::invalid_argument("pwa: needs at least one piece");
    const auto dim = pieces_.front().a.size();
    lipschitz_ = 0.0;
    for (const auto& p : pieces_) {
        if (p.a.size() != dim) throw std::invalid_argument("pwa: piece dimension mismatch");
        lipschitz_ = std::max(lipschitz_, p.a.norm());
    }
}

double PwaFunction::value(const Eigen::VectorXd& y, const Eigen::VectorXd& z) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) {
        double v = p.a.dot(y) + p.c;
        if (p.b.size() > 0) {
            if (p.b.size() != z.size())
                throw std::invalid_argument("pwa: z dimension mismatch");
            v += p.b.dot(z);
        }
        best = std::max(best, v);
    }
    return best;
}

double PwaFunction::value(const Eigen::VectorXd& y) const {
    return value(y, Eigen::VectorXd());
}

PwaFunction enumerate_l1_pieces(const std::vector<int>& selector,
                                const Eigen::VectorXd& reference, int y_dim) {
    const int count = static_cast<int>(selector.size());
    if (count == 0) throw std::invalid_argument("enumerate_l1_pieces: empty selector");
    if (count > 20) throw std::invalid_argument("enumerate_l1_pieces: selector too large");
    if (reference.size() != count)
        throw std::invalid_argument("enumerate_l1_pieces: reference size mismatch");
    for (int idx : selector)
        if (idx < 0 || idx >= y_dim)
            throw std::invalid_argument("enumerate_l1_pieces: selector index out of range");

    std::vector<PwaPiece> pieces;
    pieces.reserve(1u << count);
    for (unsigned mask = 0; mask < (1u << count); ++mask) {
        PwaPiece piece;
        piece.a = Eigen::VectorXd::Zero(y_dim);
        piece.c = 0.0;
        for (int p = 0; p < count; ++p) {
            const double sign = (mask >> p) & 1u ? 1.0 : -1.0;
            piece.a(selector[p]) = sign;
            piece.c -= sign * reference(p);
        }
        pieces.push_back(std::move(piece));
    }
    return PwaFunction(std::move(pieces));
}

namespace {

// merge atoms closer than 1e-12, summing weights; drop zero-weight atoms
DiscreteDistribution merge_atoms(const DiscreteDistribution& dist) {
    DiscreteDistribution merged;
    std::vector<double> weights;
    for (size_t i = 0; i < dist.atoms.size(); ++i) {
        if (dist.weights(static_cast<Eigen::Index>(i)) == 0.0) continue;
        bool found = false;
        for (size_t j = 0; j < merged.atoms.size(); ++j) {
            if ((merged.atoms[j] - dist.atoms[i]).norm() <= 1e-12) {
                weights[j] += dist.weights(static_cast<Eigen::Index>(i));
                found = true;
                break;
            }
        }
        if (!found) {
            merged.atoms.push_back(dist.atoms[i]);
            weights.push_back(dist.weights(static_cast<Eigen::Index>(i)));
        }
    }
    merged.weights = Eigen::Map<Eigen::VectorXd>(weights.data(),
                                                 static_cast<Eigen::Index>(weights.size()));
    return merged;
}

}  // namespace

double wasserstein_discrete(const DiscreteDistribution& P, const DiscreteDistribution& Q) {
    P.validate();
    Q.validate();
    if (P.dim() != Q.dim())
        throw std::invalid_argument("wasserstein: atom dimension mismatch");

    const DiscreteDistribution a = merge_atoms(P);
    const DiscreteDistribution b = merge_atoms(Q);
    const int M = static_cast<int>(a.atoms.size());
    const int N = static_cast<int>(b.atoms.size());

    Eigen::MatrixXd cost(M, N);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < N; ++j) cost(i, j) = (a.atoms[i] - b.atoms[j]).norm();

    return transportation_lp(a.weights, b.weights, cost);
}

double cvar_empirical(const std::vector<double>& values,
                      const std::vector<double>& weights, double beta) {
    if (values.empty()) throw std::invalid_argument("cvar: empty values");
    if (values.size() != weights.size())
        throw std::invalid_argument("cvar: weight count mismatch");
    if (!(beta > 0.0 && beta <= 1.0))
        throw std::invalid_argument("cvar: beta must be in (0, 1]");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0) throw std::invalid_argument("cvar: negative weight");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("cvar: weights must sum to 1");

    // sort by value; objective at breakpoint t = -v_k needs suffix sums of
    // w and w*v over values above v_k
    const size_t count = values.size();
    std::vector<size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t lhs, size_t rhs) { return values[lhs] < values[rhs]; });

    std::vector<double> suffix_w(count + 1, 0.0), suffix_wv(count + 1, 0.0);
    for (size_t k = count; k-- > 0;) {
        suffix_w[k] = suffix_w[k + 1] + weights[order[k]];
        suffix_wv[k] = suffix_wv[k + 1] + weights[order[k]] * values[order[k]];
    }

    double best = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < count; ++k) {
        const double t = -values[order[k]];
        // E[(v + t)_+] over v >= v_k
        const double positive_part = suffix_wv[k] + t * suffix_w[k];
        best = std::min(best, positive_part / beta - t);
    }
    return best;
}

double worst_case_expectation_pwa(const PwaFunction& h, const DiscreteDistribution& P,
                                  const Eigen::VectorXd& z, double eps) {
    P.validate();
    if (eps < 0) throw std::invalid_argument("worst_case_expectation: eps >= 0 required");
    double mean = 0.0;
    for (size_t i = 0; i < P.atoms.size(); ++i)
        mean += P.weights(static_cast<Eigen::Index>(i)) * h.value(P.atoms[i], z);
    return h.lipschitz() * eps + mean;
}

}  // namespace drmpc
