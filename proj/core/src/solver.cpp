#include "drmpc/conic.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace drmpc {

namespace {

constexpr double kGamma = 0.99;        // step scaling toward the cone boundary
constexpr double kDeltaStat = 7e-8;    // static KKT regularization
constexpr double kLinsysAcc = 1e-14;   // target accuracy of KKT solves
constexpr int kNitRef = 9;             // max iterative refinement steps
constexpr double kIrErrFact = 6.0;     // stop refining when error shrinks slower
constexpr double kStepMin = 1e-6;
constexpr double kStepMax = 0.999;
constexpr double kSigmaMin = 1e-4;
constexpr double kSigmaMax = 0.9999;
constexpr double kSafeguard = 500.0;   // allowed growth of pres between iterates
constexpr int kEquilIters = 3;

/*
 * Standard cone form
 *
 *   min c'x   s.t.  A x = b,  G x + s = h,  s in K
 *
 * with K = R^l_+ x SOC(d_1) x ... x SOC(d_k).
 */
struct StandardForm {
    int n = 0, p = 0, m = 0, l = 0;
    std::vector<int> soc;
    Eigen::SparseMatrix<double> A, G;
    Eigen::VectorXd c, b, h;
};

StandardForm to_standard_form(const ConicProgram& prog) {
    StandardForm sf;
    sf.n = prog.num_variables();
    sf.p = static_cast<int>(prog.equalities().size());
    sf.l = static_cast<int>(prog.inequalities().size());
    sf.m = sf.l;
    for (const auto& cone : prog.cones()) {
        const int dim = 1 + static_cast<int>(cone.arg.size());
        sf.soc.push_back(dim);
        sf.m += dim;
    }

    sf.c = Eigen::Map<const Eigen::VectorXd>(prog.objective().data(), sf.n);
    sf.b.resize(sf.p);
    sf.h.resize(sf.m);

    std::vector<Eigen::Triplet<double>> ta, tg;
    for (int k = 0; k < sf.p; ++k) {
        const auto& e = prog.equalities()[k];
        for (const auto& [idx, coeff] : e.terms) ta.emplace_back(k, idx, coeff);
        sf.b(k) = -e.constant;
    }
    int row = 0;
    for (const auto& e : prog.inequalities()) {
        for (const auto& [idx, coeff] : e.terms) tg.emplace_back(row, idx, coeff);
        sf.h(row) = -e.constant;
        ++row;
    }
    // SOC block (t, u) in K  <=>  t >= ||u||; slack rows s0 = x[bv], s1 = arg.
    for (const auto& cone : prog.cones()) {
        tg.emplace_back(row, cone.bound_var, -1.0);
        sf.h(row) = 0.0;
        ++row;
        for (const auto& e : cone.arg) {
            for (const auto& [idx, coeff] : e.terms) tg.emplace_back(row, idx, -coeff);
            sf.h(row) = e.constant;
            ++row;
        }
    }

    sf.A.resize(sf.p, sf.n);
    sf.A.setFromTriplets(ta.begin(), ta.end());
    sf.G.resize(sf.m, sf.n);
    sf.G.setFromTriplets(tg.begin(), tg.end());
    return sf;
}

void max_abs_rows(Eigen::VectorXd& e, const Eigen::SparseMatrix<double>& m) {
    for (int j = 0; j < m.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it)
            e(it.row()) = std::max(std::fabs(it.value()), e(it.row()));
}

void max_abs_cols(Eigen::VectorXd& e, const Eigen::SparseMatrix<double>& m) {
    for (int j = 0; j < m.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it)
            e(j) = std::max(std::fabs(it.value()), e(j));
}

void scale_rows(const Eigen::VectorXd& e, Eigen::SparseMatrix<double>& m) {
    for (int j = 0; j < m.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it)
            it.valueRef() /= e(it.row());
}

void scale_cols(const Eigen::VectorXd& e, Eigen::SparseMatrix<double>& m) {
    for (int j = 0; j < m.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it)
            it.valueRef() /= e(j);
}

enum class ExitCode {
    optimal,
    close_to_optimal,
    primal_infeasible,
    close_to_primal_infeasible,
    dual_infeasible,
    close_to_dual_infeasible,
    max_iterations,
    numerics,
    not_converged
};

class Ipm {
  public:
    Ipm(const StandardForm& sf, const SolverSettings& st, double obj_constant)
        : sf_(sf), settings_(st), obj_constant_(obj_constant) {
        n_ = sf.n;
        p_ = sf.p;
        m_ = sf.m;
        l_ = sf.l;
        soc_ = sf.soc;
        A_ = sf.A;
        G_ = sf.G;
        c_ = sf.c;
        b_ = sf.b;
        h_ = sf.h;
        equilibrate();
        At_ = A_.transpose();
        Gt_ = G_.transpose();
        w_lin_.resize(l_);
        v_lin_.resize(l_);
        Wsoc_.resize(soc_.size());
        Vsoc_.resize(soc_.size());
    }

    SolveResult run();

  private:
    struct Iterate {
        Eigen::VectorXd x, y, z, s, lambda;
        double tau = 1.0, kap = 1.0;
        // statistics of this iterate
        double pcost = 0, dcost = 0, gap = 0, mu = 0, kapovert = 0;
        std::optional<double> relgap, pinfres, dinfres;
        double pres = 0, dres = 0;
        double cx = 0, by = 0, hz = 0;
        int iter = 0;
        double step = 0;

        bool better_than(const Iterate& o) const {
            if (pinfres.has_value() && kapovert > 1.0) {
                return gap > 0 && o.gap > 0 && gap < o.gap &&
                       *pinfres > 0 && *pinfres < o.pres && mu > 0 && mu < o.mu;
            }
            return gap > 0 && o.gap > 0 && gap < o.gap && pres > 0 && pres < o.pres &&
                   dres > 0 && dres < o.dres && kapovert > 0 && kapovert < o.kapovert &&
                   mu > 0 && mu < o.mu;
        }
    };

    void equilibrate();
    void assemble_kkt(bool identity_scaling);
    bool update_scalings();
    void scale_by_w(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;
    void apply_v(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;  // out = V u
    void conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       Eigen::VectorXd& out) const;
    void conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                        Eigen::VectorXd& out) const;
    void bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& s) const;
    int solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                  Eigen::VectorXd& dz, bool identity_scaling);
    double line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                       const Eigen::VectorXd& dz, double tau, double dtau, double kap,
                       double dkap) const;
    void compute_residuals();
    void update_statistics();
    ExitCode check_exit(bool reduced) const;
    SolveResult finish(ExitCode code);

    StandardForm sf_;  // original (unequilibrated) data
    SolverSettings settings_;
    double obj_constant_ = 0.0;

    int n_, p_, m_, l_;
    std::vector<int> soc_;
    Eigen::SparseMatrix<double> A_, G_, At_, Gt_;
    Eigen::VectorXd c_, b_, h_;
    Eigen::VectorXd x_equil_, A_equil_, G_equil_;

    // Nesterov-Todd scalings: diagonal for the orthant, one dense
    // symmetric block per second-order cone (V = W^2).
    Eigen::VectorXd w_lin_, v_lin_;
    std::vector<Eigen::MatrixXd> Wsoc_, Vsoc_;

    Eigen::SparseMatrix<double> K_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
    bool pattern_analyzed_ = false;

    Iterate w_, best_;
    Eigen::VectorXd rx_, ry_, rz_;
    double rt_ = 0;
    double hresx_ = 0, hresy_ = 0, hresz_ = 0;
    double nx_ = 0, ny_ = 0, nz_ = 0, ns_ = 0;
    double resx0_ = 1, resy0_ = 1, resz0_ = 1;
};

void Ipm::equilibrate() {
    x_equil_ = Eigen::VectorXd::Ones(n_);
    A_equil_ = Eigen::VectorXd::Ones(p_);
    G_equil_ = Eigen::VectorXd::Ones(m_);

    for (int iter = 0; iter < kEquilIters; ++iter) {
        Eigen::VectorXd xt = Eigen::VectorXd::Zero(n_);
        Eigen::VectorXd at = Eigen::VectorXd::Zero(p_);
        Eigen::VectorXd gt = Eigen::VectorXd::Zero(m_);
        max_abs_cols(xt, A_);
        max_abs_cols(xt, G_);
        max_abs_rows(at, A_);
        max_abs_rows(gt, G_);

        // one common scale per cone block, otherwise the cone is distorted
        int ind = l_;
        for (int d : soc_) {
            const double total = gt.segment(ind, d).sum();
            gt.segment(ind, d).setConstant(total);
            ind += d;
        }

        auto sqrt_or_one = [](double a) { return std::fabs(a) < 1e-6 ? 1.0 : std::sqrt(a); };
        xt = xt.unaryExpr(sqrt_or_one);
        at = at.unaryExpr(sqrt_or_one);
        gt = gt.unaryExpr(sqrt_or_one);

        scale_rows(at, A_);
        scale_rows(gt, G_);
        scale_cols(xt, A_);
        scale_cols(xt, G_);

        x_equil_ = x_equil_.cwiseProduct(xt);
        A_equil_ = A_equil_.cwiseProduct(at);
        G_equil_ = G_equil_.cwiseProduct(gt);
    }

    c_ = c_.cwiseQuotient(x_equil_);
    b_ = b_.cwiseQuotient(A_equil_);
    h_ = h_.cwiseQuotient(G_equil_);
}

/*
 *      [ dI  A'      G'    ]
 *  K = [ A  -dI      0     ]
 *      [ G   0   -V - dI'  ]
 *
 * V is the NT scaling W^2 (identity before the first iteration). The full
 * symmetric matrix is assembled; the sparsity pattern is identical across
 * iterations so the symbolic analysis is done once.
 */
void Ipm::assemble_kkt(bool identity_scaling) {
    const int dim = n_ + p_ + m_;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(2 * (A_.nonZeros() + G_.nonZeros()) + dim + 2 * m_);

    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, kDeltaStat);
    for (int i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -kDeltaStat);

    for (int j = 0; j < A_.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A_, j); it; ++it) {
            t.emplace_back(n_ + it.row(), it.col(), it.value());
            t.emplace_back(it.col(), n_ + it.row(), it.value());
        }
    for (int j = 0; j < G_.outerSize(); ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(G_, j); it; ++it) {
            t.emplace_back(n_ + p_ + it.row(), it.col(), it.value());
            t.emplace_back(it.col(), n_ + p_ + it.row(), it.value());
        }

    const int zoff = n_ + p_;
    if (identity_scaling) {
        for (int i = 0; i < m_; ++i) t.emplace_back(zoff + i, zoff + i, -1.0 - kDeltaStat);
        // keep dense cone blocks in the pattern
        int ind = l_;
        for (int d : soc_) {
            for (int r = 0; r < d; ++r)
                for (int s = 0; s < d; ++s)
                    if (r != s) t.emplace_back(zoff + ind + r, zoff + ind + s, 0.0);
            ind += d;
        }
    } else {
        for (int i = 0; i < l_; ++i)
            t.emplace_back(zoff + i, zoff + i, -v_lin_(i) - kDeltaStat);
        int ind = l_;
        for (size_t k = 0; k < soc_.size(); ++k) {
            const int d = soc_[k];
            for (int r = 0; r < d; ++r)
                for (int s = 0; s < d; ++s) {
                    double v = -Vsoc_[k](r, s);
                    if (r == s) v -= kDeltaStat;
                    t.emplace_back(zoff + ind + r, zoff + ind + s, v);
                }
            ind += d;
        }
    }

    K_.resize(dim, dim);
    K_.setFromTriplets(t.begin(), t.end());
    if (!pattern_analyzed_) {
        ldlt_.analyzePattern(K_);
        pattern_analyzed_ = true;
    }
    ldlt_.factorize(K_);
}

bool Ipm::update_scalings() {
    const auto& s = w_.s;
    const auto& z = w_.z;
    for (int i = 0; i < l_; ++i) {
        if (s(i) <= 0 || z(i) <= 0) return false;
        v_lin_(i) = s(i) / z(i);
        w_lin_(i) = std::sqrt(v_lin_(i));
    }
    int ind = l_;
    for (size_t k = 0; k < soc_.size(); ++k) {
        const int d = soc_[k];
        const double sres = s(ind) * s(ind) - s.segment(ind + 1, d - 1).squaredNorm();
        const double zres = z(ind) * z(ind) - z.segment(ind + 1, d - 1).squaredNorm();
        if (sres <= 0 || zres <= 0) return false;
        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        const Eigen::VectorXd sbar = s.segment(ind, d) / snorm;
        const Eigen::VectorXd zbar = z.segment(ind, d) / znorm;
        const double eta = std::sqrt(snorm / znorm);
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));

        // W = eta * [a q'; q I + qq'/(1+a)] with a^2 - q'q = 1
        const double a = (0.5 / gamma) * (sbar(0) + zbar(0));
        const Eigen::VectorXd q =
            (0.5 / gamma) * (sbar.tail(d - 1) - zbar.tail(d - 1));

        Eigen::MatrixXd& W = Wsoc_[k];
        W.resize(d, d);
        W(0, 0) = a;
        W.block(0, 1, 1, d - 1) = q.transpose();
        W.block(1, 0, d - 1, 1) = q;
        W.block(1, 1, d - 1, d - 1) =
            Eigen::MatrixXd::Identity(d - 1, d - 1) + q * q.transpose() / (1.0 + a);
        W *= eta;
        Vsoc_[k] = W * W;
        ind += d;
    }
    scale_by_w(z, w_.lambda);
    return true;
}

void Ipm::scale_by_w(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
    out.resize(m_);
    out.head(l_) = w_lin_.cwiseProduct(u.head(l_));
    int ind = l_;
    for (size_t k = 0; k < soc_.size(); ++k) {
        const int d = soc_[k];
        out.segment(ind, d) = Wsoc_[k] * u.segment(ind, d);
        ind += d;
    }
}

void Ipm::apply_v(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
    out.resize(m_);
    out.head(l_) = v_lin_.cwiseProduct(u.head(l_));
    int ind = l_;
    for (size_t k = 0; k < soc_.size(); ++k) {
        const int d = soc_[k];
        out.segment(ind, d) = Vsoc_[k] * u.segment(ind, d);
        ind += d;
    }
}

void Ipm::conic_product(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                        Eigen::VectorXd& out) const {
    out.resize(m_);
    out.head(l_) = u.head(l_).cwiseProduct(v.head(l_));
    int ind = l_;
    for (int d : soc_) {
        out(ind) = u.segment(ind, d).dot(v.segment(ind, d));
        out.segment(ind + 1, d - 1) = u(ind) * v.segment(ind + 1, d - 1) +
                                      v(ind) * u.segment(ind + 1, d - 1);
        ind += d;
    }
}

void Ipm::conic_division(const Eigen::VectorXd& u, const Eigen::VectorXd& w,
                         Eigen::VectorXd& out) const {
    out.resize(m_);
    out.head(l_) = w.head(l_).cwiseQuotient(u.head(l_));
    int ind = l_;
    for (int d : soc_) {
        const double u0 = u(ind);
        const double w0 = w(ind);
        const double rho = u0 * u0 - u.segment(ind + 1, d - 1).squaredNorm();
        const double zeta = u.segment(ind + 1, d - 1).dot(w.segment(ind + 1, d - 1));
        const double factor = (zeta / u0 - w0) / rho;
        out(ind) = (u0 * w0 - zeta) / rho;
        out.segment(ind + 1, d - 1) =
            factor * u.segment(ind + 1, d - 1) + w.segment(ind + 1, d - 1) / u0;
        ind += d;
    }
}

void Ipm::bring_to_cone(const Eigen::VectorXd& r, Eigen::VectorXd& s) const {
    double alpha = -kGamma;
    for (int i = 0; i < l_; ++i)
        if (r(i) <= 0 && -r(i) > alpha) alpha = -r(i);
    int ind = l_;
    for (int d : soc_) {
        const double cres = r(ind) - r.segment(ind + 1, d - 1).norm();
        if (cres <= 0 && -cres > alpha) alpha = -cres;
        ind += d;
    }
    alpha += 1.0;
    s = r;
    s.head(l_).array() += alpha;
    ind = l_;
    for (int d : soc_) {
        s(ind) += alpha;
        ind += d;
    }
}

int Ipm::solve_kkt(const Eigen::VectorXd& rhs, Eigen::VectorXd& dx, Eigen::VectorXd& dy,
                   Eigen::VectorXd& dz, bool identity_scaling) {
    Eigen::VectorXd u = ldlt_.solve(rhs);
    const double error_threshold = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * kLinsysAcc;

    const auto bx = rhs.head(n_);
    const auto by = rhs.segment(n_, p_);
    const auto bz = rhs.tail(m_);

    double nerr_prev = std::numeric_limits<double>::max();
    Eigen::VectorXd du(n_ + p_ + m_);

    int k_ref;
    for (k_ref = 0; k_ref <= kNitRef; ++k_ref) {
        const auto ux = u.head(n_);
        const auto uy = u.segment(n_, p_);
        const auto uz = u.tail(m_);

        // residual of the unregularized KKT system
        Eigen::VectorXd ex = bx - Gt_ * uz;
        if (p_ > 0) ex -= At_ * uy;
        Eigen::VectorXd ey = by;
        if (p_ > 0) ey -= A_ * ux;
        Eigen::VectorXd ez = bz - G_ * ux;
        if (identity_scaling) {
            ez += uz;
        } else {
            Eigen::VectorXd vu;
            apply_v(uz, vu);
            ez += vu;
        }

        double nerr = std::max(ex.lpNorm<Eigen::Infinity>(), ez.lpNorm<Eigen::Infinity>());
        if (p_ > 0) nerr = std::max(nerr, ey.lpNorm<Eigen::Infinity>());

        if (k_ref > 0 && nerr > nerr_prev) {
            u -= du;
            --k_ref;
            break;
        }
        if (k_ref == kNitRef || nerr < error_threshold ||
            (k_ref > 0 && nerr_prev < kIrErrFact * nerr)) {
            break;
        }
        nerr_prev = nerr;

        Eigen::VectorXd e(n_ + p_ + m_);
        e << ex, ey, ez;
        du = ldlt_.solve(e);
        u += du;
    }

    dx = u.head(n_);
    dy = u.segment(n_, p_);
    dz = u.tail(m_);
    return k_ref;
}

double Ipm::line_search(const Eigen::VectorXd& lambda, const Eigen::VectorXd& ds,
                        const Eigen::VectorXd& dz, double tau, double dtau, double kap,
                        double dkap) const {
    double alpha = 10.0;
    if (l_ > 0) {
        const double rhomin = (ds.head(l_).cwiseQuotient(lambda.head(l_))).minCoeff();
        const double sigmamin = (dz.head(l_).cwiseQuotient(lambda.head(l_))).minCoeff();
        const double worst = std::min(rhomin, sigmamin);
        alpha = worst < 0 ? 1.0 / (-worst) : 1.0 / 1e-13;
    }
    const double tau_bound = -tau / dtau;
    const double kap_bound = -kap / dkap;
    if (tau_bound > 0 && tau_bound < alpha) alpha = tau_bound;
    if (kap_bound > 0 && kap_bound < alpha) alpha = kap_bound;

    int ind = l_;
    for (int d : soc_) {
        const double lk2 =
            lambda(ind) * lambda(ind) - lambda.segment(ind + 1, d - 1).squaredNorm();
        if (lk2 <= 0) {
            ind += d;
            continue;
        }
        const double lknorm = std::sqrt(lk2);
        Eigen::VectorXd lkbar = lambda.segment(ind, d) / lknorm;
        const double lknorminv = 1.0 / lknorm;

        const double lkbar_ds = lkbar(0) * ds(ind) -
                                lkbar.tail(d - 1).dot(ds.segment(ind + 1, d - 1));
        const double lkbar_dz = lkbar(0) * dz(ind) -
                                lkbar.tail(d - 1).dot(dz.segment(ind + 1, d - 1));

        double factor = (lkbar_ds + ds(ind)) / (lkbar(0) + 1.0);
        Eigen::VectorXd rho(d);
        rho(0) = lknorminv * lkbar_ds;
        rho.tail(d - 1) =
            lknorminv * (ds.segment(ind + 1, d - 1) - factor * lkbar.tail(d - 1));
        const double rhonorm = rho.tail(d - 1).norm() - rho(0);

        factor = (lkbar_dz + dz(ind)) / (lkbar(0) + 1.0);
        Eigen::VectorXd sig(d);
        sig(0) = lknorminv * lkbar_dz;
        sig.tail(d - 1) =
            lknorminv * (dz.segment(ind + 1, d - 1) - factor * lkbar.tail(d - 1));
        const double signorm = sig.tail(d - 1).norm() - sig(0);

        const double conic_step = std::max({0.0, rhonorm, signorm});
        if (conic_step != 0.0) alpha = std::min(alpha, 1.0 / conic_step);
        ind += d;
    }
    return std::clamp(alpha, kStepMin, kStepMax);
}

void Ipm::compute_residuals() {
    rx_ = -(Gt_ * w_.z);
    if (p_ > 0) rx_ -= At_ * w_.y;
    hresx_ = rx_.norm();
    rx_ -= w_.tau * c_;

    if (p_ > 0) {
        ry_ = A_ * w_.x;
        hresy_ = ry_.norm();
        ry_ -= w_.tau * b_;
    } else {
        ry_.resize(0);
        hresy_ = 0;
    }

    rz_ = w_.s + G_ * w_.x;
    hresz_ = rz_.norm();
    rz_ -= w_.tau * h_;

    w_.cx = c_.dot(w_.x);
    w_.by = p_ > 0 ? b_.dot(w_.y) : 0.0;
    w_.hz = h_.dot(w_.z);
    rt_ = w_.kap + w_.cx + w_.by + w_.hz;

    nx_ = w_.x.norm();
    ny_ = w_.y.norm();
    nz_ = w_.z.norm();
    ns_ = w_.s.norm();
}

void Ipm::update_statistics() {
    const int nu = l_ + static_cast<int>(soc_.size());
    w_.gap = w_.s.dot(w_.z);
    w_.mu = (w_.gap + w_.kap * w_.tau) / (nu + 1);
    w_.kapovert = w_.kap / w_.tau;
    w_.pcost = w_.cx / w_.tau;
    w_.dcost = -(w_.hz + w_.by) / w_.tau;

    if (w_.pcost < 0)
        w_.relgap = w_.gap / (-w_.pcost);
    else if (w_.dcost > 0)
        w_.relgap = w_.gap / w_.dcost;
    else
        w_.relgap.reset();

    const double nry = p_ > 0 ? ry_.norm() / std::max(resy0_ + nx_, 1.0) : 0.0;
    const double nrz = rz_.norm() / std::max(resz0_ + nx_ + ns_, 1.0);
    w_.pres = std::max(nry, nrz) / w_.tau;
    w_.dres = rx_.norm() / std::max(resx0_ + ny_ + nz_, 1.0) / w_.tau;

    w_.pinfres.reset();
    w_.dinfres.reset();
    if ((w_.hz + w_.by) / std::max(ny_ + nz_, 1.0) < -settings_.reltol)
        w_.pinfres = hresx_ / std::max(ny_ + nz_, 1.0);
    if (w_.cx / std::max(nx_, 1.0) < -settings_.reltol)
        w_.dinfres = std::max(hresy_ / std::max(nx_, 1.0),
                              hresz_ / std::max(nx_ + ns_, 1.0));
}

ExitCode Ipm::check_exit(bool reduced) const {
    const double feastol = reduced ? settings_.feastol_reduced : settings_.feastol;
    const double abstol = reduced ? settings_.abstol_reduced : settings_.abstol;
    const double reltol = reduced ? settings_.reltol_reduced : settings_.reltol;

    if ((-w_.cx > 0 || -w_.by - w_.hz >= -abstol) && w_.pres < feastol &&
        w_.dres < feastol && (w_.gap < abstol || (w_.relgap && *w_.relgap < reltol))) {
        return reduced ? ExitCode::close_to_optimal : ExitCode::optimal;
    }
    if (w_.dinfres && *w_.dinfres < feastol && w_.tau < w_.kap) {
        return reduced ? ExitCode::close_to_dual_infeasible : ExitCode::dual_infeasible;
    }
    if ((w_.pinfres && *w_.pinfres < feastol && w_.tau < w_.kap) ||
        (w_.tau < feastol && w_.kap < feastol && w_.pinfres && *w_.pinfres < feastol)) {
        return reduced ? ExitCode::close_to_primal_infeasible
                       : ExitCode::primal_infeasible;
    }
    return ExitCode::not_converged;
}

SolveResult Ipm::finish(ExitCode code) {
    SolveResult result;
    result.stats.iterations = w_.iter;
    result.stats.primal_residual = w_.pres;
    result.stats.dual_residual = w_.dres;
    result.stats.gap = w_.gap;
    result.stats.relative_gap = w_.relgap.value_or(0.0);

    switch (code) {
        case ExitCode::close_to_optimal:
            result.stats.reduced_accuracy = true;
            [[fallthrough]];
        case ExitCode::optimal: {
            result.status = SolveStatus::optimal;
            result.x = w_.x.cwiseQuotient(x_equil_ * w_.tau);
            result.objective = sf_.c.dot(result.x) + obj_constant_;
            break;
        }
        case ExitCode::close_to_primal_infeasible:
            result.stats.reduced_accuracy = true;
            [[fallthrough]];
        case ExitCode::primal_infeasible:
            result.status = SolveStatus::infeasible;
            break;
        case ExitCode::close_to_dual_infeasible:
            result.stats.reduced_accuracy = true;
            [[fallthrough]];
        case ExitCode::dual_infeasible:
            result.status = SolveStatus::unbounded;
            break;
        default:
            result.status = SolveStatus::numerical_failure;
            break;
    }
    return result;
}

SolveResult Ipm::run() {
    w_.x.setZero(n_);
    w_.y.setZero(p_);
    w_.s.setZero(m_);
    w_.z.setZero(m_);
    w_.lambda.setZero(m_);

    resx0_ = std::max(1.0, c_.norm());
    resy0_ = std::max(1.0, b_.norm());
    resz0_ = std::max(1.0, h_.norm());

    assemble_kkt(true);
    if (ldlt_.info() != Eigen::Success) return finish(ExitCode::numerics);

    // init: primal from min-norm slack of [0;b;h], dual from [-c;0;0]
    Eigen::VectorXd rhs1(n_ + p_ + m_), rhs2(n_ + p_ + m_);
    rhs1.setZero();
    rhs1.segment(n_, p_) = b_;
    rhs1.tail(m_) = h_;
    rhs2.setZero();
    rhs2.head(n_) = -c_;

    Eigen::VectorXd dx1(n_), dy1(p_), dz1(m_);
    Eigen::VectorXd dx2(n_), dy2(p_), dz2(m_);
    solve_kkt(rhs1, dx1, dy1, dz1, true);
    w_.x = dx1;
    bring_to_cone(-dz1, w_.s);
    solve_kkt(rhs2, dx2, dy2, dz2, true);
    w_.y = dy2;
    bring_to_cone(dz2, w_.z);
    w_.tau = 1.0;
    w_.kap = 1.0;

    rhs1.head(n_) = -c_;

    Eigen::VectorXd W_dzaff(m_), ds_by_w(m_), ds_raw(m_), ds1(m_), ds2(m_);
    double pres_prev = std::numeric_limits<double>::max();
    ExitCode code = ExitCode::not_converged;

    for (w_.iter = 0; w_.iter <= settings_.max_iterations; ++w_.iter) {
        compute_residuals();
        update_statistics();

        if (w_.iter > 0 && (w_.pres > kSafeguard * pres_prev || w_.gap < 0)) {
            w_ = best_;
            code = check_exit(true);
            if (code == ExitCode::not_converged) code = ExitCode::numerics;
            break;
        }
        pres_prev = w_.pres;

        code = check_exit(false);
        if (code != ExitCode::not_converged) break;

        if (w_.iter > 0 && w_.step == kStepMin * kGamma) {
            w_ = best_;
            code = check_exit(true);
            if (code == ExitCode::not_converged) code = ExitCode::numerics;
            break;
        }
        if (w_.iter == settings_.max_iterations) {
            if (!w_.better_than(best_)) w_ = best_;
            code = check_exit(true);
            if (code == ExitCode::not_converged) code = ExitCode::max_iterations;
            break;
        }
        if (std::isnan(w_.pcost)) {
            if (w_.iter > 0 && !w_.better_than(best_)) {
                w_ = best_;
                code = check_exit(true);
            }
            if (code == ExitCode::not_converged) code = ExitCode::numerics;
            break;
        }

        if (w_.iter == 0 || w_.better_than(best_)) best_ = w_;

        if (!update_scalings()) {
            w_ = best_;
            code = check_exit(true);
            if (code == ExitCode::not_converged) code = ExitCode::numerics;
            break;
        }
        assemble_kkt(false);
        if (ldlt_.info() != Eigen::Success) {
            w_ = best_;
            code = check_exit(true);
            if (code == ExitCode::not_converged) code = ExitCode::numerics;
            break;
        }

        solve_kkt(rhs1, dx1, dy1, dz1, false);

        // affine (predictor) direction
        rhs2.head(n_) = rx_;
        rhs2.segment(n_, p_) = -ry_;
        rhs2.tail(m_) = w_.s - rz_;
        solve_kkt(rhs2, dx2, dy2, dz2, false);

        const double dtau_denom =
            w_.kap / w_.tau - c_.dot(dx1) - b_.dot(dy1) - h_.dot(dz1);
        const double dtauaff =
            (rt_ - w_.kap + c_.dot(dx2) + b_.dot(dy2) + h_.dot(dz2)) / dtau_denom;

        dz2 += dtauaff * dz1;
        scale_by_w(dz2, W_dzaff);
        ds_by_w = -W_dzaff - w_.lambda;  // W^{-T} dsaff
        const double dkapaff = -w_.kap - w_.kap / w_.tau * dtauaff;

        const double step_aff =
            line_search(w_.lambda, ds_by_w, W_dzaff, w_.tau, dtauaff, w_.kap, dkapaff);
        const double sigma =
            std::clamp(std::pow(1.0 - step_aff, 3), kSigmaMin, kSigmaMax);

        // combined (corrector) direction
        conic_product(w_.lambda, w_.lambda, ds1);
        conic_product(ds_by_w, W_dzaff, ds2);
        ds_raw = ds1 + ds2;
        const double sigmamu = sigma * w_.mu;
        ds_raw.head(l_).array() -= sigmamu;
        int ind = l_;
        for (int d : soc_) {
            ds_raw(ind) -= sigmamu;
            ind += d;
        }
        conic_division(w_.lambda, ds_raw, ds_by_w);  // lambda \ ds
        scale_by_w(ds_by_w, ds1);                    // W (lambda \ ds)

        const double one_minus_sigma = 1.0 - sigma;
        rhs2.head(n_) = one_minus_sigma * rx_;
        rhs2.segment(n_, p_) = -one_minus_sigma * ry_;
        rhs2.tail(m_) = -one_minus_sigma * rz_ + ds1;
        solve_kkt(rhs2, dx2, dy2, dz2, false);

        const double bkap = w_.kap * w_.tau + dkapaff * dtauaff - sigmamu;
        const double dtau = (one_minus_sigma * rt_ - bkap / w_.tau + c_.dot(dx2) +
                             b_.dot(dy2) + h_.dot(dz2)) /
                            dtau_denom;
        dx2 += dtau * dx1;
        dy2 += dtau * dy1;
        dz2 += dtau * dz1;

        scale_by_w(dz2, W_dzaff);
        ds_by_w = -(ds_by_w + W_dzaff);
        const double dkap = -(bkap + w_.kap * dtau) / w_.tau;

        w_.step = kGamma * line_search(w_.lambda, ds_by_w, W_dzaff, w_.tau, dtau,
                                       w_.kap, dkap);
        Eigen::VectorXd ds_final;
        scale_by_w(ds_by_w, ds_final);

        w_.x += w_.step * dx2;
        w_.y += w_.step * dy2;
        w_.z += w_.step * dz2;
        w_.s += w_.step * ds_final;
        w_.kap += w_.step * dkap;
        w_.tau += w_.step * dtau;
    }

    return finish(code);
}

}  // namespace

SolveResult solve(const ConicProgram& prog, const SolverSettings& settings) {
    prog.validate();
    if (prog.num_variables() == 0) throw std::invalid_argument("solve: empty program");
    StandardForm sf = to_standard_form(prog);
    if (sf.m == 0) throw std::invalid_argument("solve: program has no conic constraints");
    Ipm ipm(sf, settings, prog.objective_constant());
    return ipm.run();
}

}  // namespace drmpc
