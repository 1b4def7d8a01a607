/*
 Copyright 2026 the anisodrc authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

#include <Eigen/Sparse>
#include <nlohmann/json.hpp>
#include <optional>

#include "anisodrc/cones.hpp"
#include "anisodrc/common.hpp"

namespace anisodrc {

using SpMat = Eigen::SparseMatrix<double>;

/// Cone program in the standard form
///   min r'x   s.t.  Gx + s = h,  s in K,
/// with K an ordered product of zero, nonnegative and second-order cones.
struct ConicProblem {
    Vec r;
    SpMat G;
    Vec h;
    std::vector<Cone> cones;

    int n() const { return static_cast<int>(r.size()); }
    int m() const { return static_cast<int>(h.size()); }

    void validate() const {
        require_dim(G.rows() == h.size() && G.cols() == r.size(),
                    "ConicProblem: G/h/r dimensions inconsistent");
        require_dim(total_dim(cones) == m(), "ConicProblem: cone dims do not sum to m");
        require(r.allFinite() && h.allFinite(), "ConicProblem: non-finite entries in r/h");
        for (int k = 0; k < G.outerSize(); ++k)
            for (SpMat::InnerIterator it(G, k); it; ++it)
                require(std::isfinite(it.value()), "ConicProblem: non-finite entry in G");
    }
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIters };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::PrimalInfeasible: return "primal_infeasible";
        case SolveStatus::DualInfeasible: return "dual_infeasible";
        case SolveStatus::MaxIters: return "max_iters";
    }
    return "?";
}

struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
    double max() const { return std::max(primal, std::max(dual, gap)); }
};

struct ConicSolution {
    Vec x;
    Vec y;
    Vec s;
    SolveStatus status = SolveStatus::MaxIters;
    /// Normalized homogeneous embedding point (u, v, w) with w = 1 when
    /// status == Optimal; the raw material for differentiation.
    Vec z;
    Residuals residuals;
    int iterations = 0;
    double objective = 0.0;
};

struct SolveSettings {
    double tol = 1e-8;
    int max_iters = 50000;
    double over_relax = 1.5;
    /// Factorization budget per refinement attempt (0 disables refinement).
    int refine_steps = 10;
    int check_every = 20;
    /// Ruiz equilibration sweeps on G (0 disables scaling).
    int equilibrate_iters = 3;
};

/// Relative optimality residuals as defined for the standard form:
/// primal ||Gx+s-h||/(1+||h||), dual ||G'y+r||/(1+||r||),
/// gap |r'x+h'y|/(1+|r'x|+|h'y|).
inline Residuals check_optimality(const ConicProblem& p, const Vec& x, const Vec& y,
                                  const Vec& s) {
    require_dim(x.size() == p.r.size() && y.size() == p.h.size() && s.size() == p.h.size(),
                "check_optimality: dimension mismatch");
    Residuals res;
    res.primal = (p.G * x + s - p.h).norm() / (1.0 + p.h.norm());
    res.dual = (SpMat(p.G.transpose()) * y + p.r).norm() / (1.0 + p.r.norm());
    const double rx = p.r.dot(x);
    const double hy = p.h.dot(y);
    res.gap = std::abs(rx + hy) / (1.0 + std::abs(rx) + std::abs(hy));
    return res;
}

inline Residuals check_optimality(const ConicProblem& p, const ConicSolution& sol) {
    return check_optimality(p, sol.x, sol.y, sol.s);
}

namespace detail {

/// Solves (I + Q) out = rhs with Q the skew HSDE matrix of (G, h, r),
/// reduced to one Cholesky factorization of I + G'G (n x n).
class HsdeLinearSolver {
  public:
    HsdeLinearSolver(const SpMat& G, const Vec& h, const Vec& r)
        : G_(G), Gt_(G.transpose()), h_(h), r_(r), n_(static_cast<int>(r.size())),
          m_(static_cast<int>(h.size())) {
        Mat GtG = Mat::Identity(n_, n_) + Mat(Gt_ * G_);
        llt_.compute(GtG);
        require(llt_.info() == Eigen::Success, "HSDE linear solver factorization failed");
        // Border column (r; h) for the rank-one bordered system.
        gr_.resize(n_);
        gh_.resize(m_);
        inner_solve(r_, h_, gr_, gh_);
        denom_ = 1.0 + r_.dot(gr_) + h_.dot(gh_);
    }

    /// out := (I + Q)^{-1} rhs, both of size n + m + 1.
    void solve(const Vec& rhs, Vec& out) const {
        Vec a = rhs.head(n_);
        Vec b = rhs.segment(n_, m_);
        const double c = rhs[n_ + m_];
        Vec p(n_), q(m_);
        inner_solve(a, b, p, q);
        const double sden = (c + r_.dot(p) + h_.dot(q)) / denom_;
        out.resize(n_ + m_ + 1);
        out.head(n_) = p - sden * gr_;
        out.segment(n_, m_) = q - sden * gh_;
        out[n_ + m_] = sden;
    }

  private:
    // Solves [[I, G'], [-G, I]] (p, q) = (a, b) via p = (I+G'G)^{-1}(a - G'b).
    void inner_solve(const Vec& a, const Vec& b, Vec& p, Vec& q) const {
        p = llt_.solve(a - Gt_ * b);
        q = b + G_ * p;
    }

    SpMat G_, Gt_;
    Vec h_, r_;
    int n_, m_;
    Eigen::LLT<Mat> llt_;
    Vec gr_, gh_;
    double denom_ = 1.0;
};

/// Dense (n+m+1)-square matrix of the skew HSDE embedding.
inline Mat dense_Q(const ConicProblem& p) {
    const int n = p.n(), m = p.m();
    Mat Q = Mat::Zero(n + m + 1, n + m + 1);
    Mat Gd = Mat(p.G);
    Q.block(0, n, n, m) = Gd.transpose();
    Q.block(n, 0, m, n) = -Gd;
    Q.block(0, n + m, n, 1) = p.r;
    Q.block(n, n + m, m, 1) = p.h;
    Q.block(n + m, 0, 1, n) = -p.r.transpose();
    Q.block(n + m, n, 1, m) = -p.h.transpose();
    return Q;
}

/// Projection onto R^n x K* x R_+ of the stacked HSDE point.
inline Vec hsde_project(const ConicProblem& p, const Vec& z) {
    const int n = p.n(), m = p.m();
    Vec out(n + m + 1);
    out.head(n) = z.head(n);
    out.segment(n, m) = project_dual_cones(p.cones, z.segment(n, m));
    out[n + m] = std::max(z[n + m], 0.0);
    return out;
}

/// Block-diagonal generalized Jacobian of hsde_project.
inline Mat hsde_dproject(const ConicProblem& p, const Vec& z) {
    const int n = p.n(), m = p.m();
    Mat D = Mat::Zero(n + m + 1, n + m + 1);
    D.topLeftCorner(n, n).setIdentity();
    int off = n;
    for (const auto& c : p.cones) {
        D.block(off, off, c.dim, c.dim) = dproject_dual_cone(c, z.segment(off, c.dim));
        off += c.dim;
    }
    D(n + m, n + m) = z[n + m] > 0.0 ? 1.0 : 0.0;
    return D;
}

/// Normalized residual map N(z, Q) = ((Q - I)Pi + I)(z / |w|).
inline Vec hsde_residual_map(const ConicProblem& p, const Mat& Q, const Vec& z) {
    const double w = z[z.size() - 1];
    Vec zt = z / std::abs(w);
    Vec pz = hsde_project(p, zt);
    return Q * pz - pz + zt;
}

inline SpMat sparse_Q(const ConicProblem& p) {
    const int n = p.n(), m = p.m();
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < p.G.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.G, k); it; ++it) {
            trips.emplace_back(static_cast<int>(it.col()), n + static_cast<int>(it.row()),
                               it.value());
            trips.emplace_back(n + static_cast<int>(it.row()), static_cast<int>(it.col()),
                               -it.value());
        }
    for (int i = 0; i < n; ++i) {
        if (p.r[i] != 0.0) {
            trips.emplace_back(i, n + m, p.r[i]);
            trips.emplace_back(n + m, i, -p.r[i]);
        }
    }
    for (int i = 0; i < m; ++i) {
        if (p.h[i] != 0.0) {
            trips.emplace_back(n + i, n + m, p.h[i]);
            trips.emplace_back(n + m, n + i, -p.h[i]);
        }
    }
    SpMat Q(n + m + 1, n + m + 1);
    Q.setFromTriplets(trips.begin(), trips.end());
    return Q;
}

inline Vec hsde_residual_map_sp(const ConicProblem& p, const SpMat& Q, const Vec& z) {
    const double w = z[z.size() - 1];
    Vec zt = z / std::abs(w);
    Vec pz = hsde_project(p, zt);
    return Q * pz - pz + zt;
}

/// Diagonal cone-aware equilibration: G -> D G E with the rows of each
/// second-order cone sharing one scale (so the scaled slack stays in the same
/// cone), plus scalar normalizations of h and r.
struct Equilibration {
    Vec D;  // m, row scaling
    Vec E;  // n, column scaling
    double sh = 1.0;
    double sr = 1.0;

    static Equilibration compute(const ConicProblem& p, int iters) {
        const int m = p.m(), n = p.n();
        Equilibration eq;
        eq.D = Vec::Ones(m);
        eq.E = Vec::Ones(n);
        if (iters <= 0) return eq;

        Mat Gd = Mat(p.G);
        for (int it = 0; it < iters; ++it) {
            Vec rnorm(m);
            for (int i = 0; i < m; ++i) rnorm[i] = Gd.row(i).cwiseAbs().maxCoeff();
            // Rows of one SOC block share the geometric-mean scale.
            int off = 0;
            for (const auto& c : p.cones) {
                if (c.kind == Cone::Kind::Soc) {
                    double g = 0.0;
                    int cnt = 0;
                    for (int k = 0; k < c.dim; ++k)
                        if (rnorm[off + k] > 0) {
                            g += std::log(rnorm[off + k]);
                            ++cnt;
                        }
                    double shared = cnt ? std::exp(g / cnt) : 1.0;
                    for (int k = 0; k < c.dim; ++k) rnorm[off + k] = shared;
                }
                off += c.dim;
            }
            for (int i = 0; i < m; ++i) {
                double s = rnorm[i] > 1e-12 ? 1.0 / std::sqrt(rnorm[i]) : 1.0;
                eq.D[i] *= s;
                Gd.row(i) *= s;
            }
            // Column norms are taken after the row pass.
            for (int j = 0; j < n; ++j) {
                double cn = Gd.col(j).cwiseAbs().maxCoeff();
                double s = cn > 1e-12 ? 1.0 / std::sqrt(cn) : 1.0;
                eq.E[j] *= s;
                Gd.col(j) *= s;
            }
        }
        const double hn = (eq.D.asDiagonal() * p.h).norm();
        const double rn = (eq.E.asDiagonal() * p.r).norm();
        eq.sh = hn > 1e-12 ? 1.0 / hn : 1.0;
        eq.sr = rn > 1e-12 ? 1.0 / rn : 1.0;
        return eq;
    }

    ConicProblem apply(const ConicProblem& p) const {
        ConicProblem out;
        out.G = Eigen::SparseMatrix<double>(D.asDiagonal() * p.G * E.asDiagonal());
        out.h = sh * (D.asDiagonal() * p.h);
        out.r = sr * (E.asDiagonal() * p.r);
        out.cones = p.cones;
        return out;
    }

    // Scaled iterate -> original coordinates.
    Vec unscale_x(const Vec& xs) const { return (E.asDiagonal() * xs) / sh; }
    Vec unscale_y(const Vec& ys) const { return (D.asDiagonal() * ys) / sr; }
    Vec unscale_s(const Vec& ss) const { return (ss.cwiseQuotient(D)) / sh; }
    // Original point -> scaled coordinates (for warm starts).
    Vec scale_x(const Vec& x) const { return sh * x.cwiseQuotient(E); }
    Vec scale_y(const Vec& y) const { return sr * y.cwiseQuotient(D); }
    Vec scale_s(const Vec& s) const { return sh * (D.asDiagonal() * s); }
};

}  // namespace detail

namespace detail {

/// One splitting run at a fixed equilibration.
inline ConicSolution solve_attempt(const ConicProblem& p, const SolveSettings& settings,
                                   const Vec* warm_z) {
    p.validate();
    const int n = p.n(), m = p.m();
    const int N = n + m + 1;

    // The splitting runs on the equilibrated problem; all termination
    // decisions are made on the original problem's residuals.
    const detail::Equilibration eq = detail::Equilibration::compute(p, settings.equilibrate_iters);
    const ConicProblem ps = eq.apply(p);
    detail::HsdeLinearSolver lin(ps.G, ps.h, ps.r);
    const SpMat Gt = p.G.transpose();

    // Embedding point of the original problem built from a primal-dual pair;
    // by the Moreau decomposition Pi_{K*}(y - s) = y whenever y in K*,
    // s in K, y's = 0.
    auto z_from_xys = [&](const Vec& x, const Vec& y, const Vec& s) {
        Vec z(N);
        z.head(n) = x;
        z.segment(n, m) = y - s;
        z[N - 1] = 1.0;
        return z;
    };

    Vec u = Vec::Zero(N), v = Vec::Zero(N);
    u[N - 1] = 1.0;
    auto warm_start_from = [&](const Vec& z_orig) {
        // Map an original-coordinates embedding point into the scaled space.
        if (z_orig.size() != N || !(z_orig[N - 1] > 0.0)) return;
        Vec zn = z_orig / z_orig[N - 1];
        Vec y = project_dual_cones(p.cones, zn.segment(n, m));
        Vec s = y - zn.segment(n, m);
        Vec zs(N);
        zs.head(n) = eq.scale_x(zn.head(n));
        zs.segment(n, m) = eq.scale_y(y) - eq.scale_s(s);
        zs[N - 1] = 1.0;
        Vec pu = detail::hsde_project(ps, zs);
        u = pu;
        v = pu - zs;
    };
    if (warm_z != nullptr) warm_start_from(*warm_z);

    ConicSolution sol;
    sol.status = SolveStatus::MaxIters;
    double best_res = std::numeric_limits<double>::infinity();

    Vec utilde(N), tmp(N);
    std::optional<SpMat> Q_sparse;  // original-problem Q, built lazily for refinement

    auto candidate = [&](ConicSolution& out) -> bool {
        const double tau = u[N - 1];
        if (tau <= 1e-12) return false;
        out.x = eq.unscale_x(u.head(n) / tau);
        out.y = eq.unscale_y(u.segment(n, m) / tau);
        out.s = eq.unscale_s(v.segment(n, m) / tau);
        out.residuals = check_optimality(p, out.x, out.y, out.s);
        return true;
    };

    // Semismooth Newton on the original residual map, started from the
    // candidate's reconstructed embedding point. The bordered system pins the
    // homogeneity direction; when that step fails (flat optimal faces make
    // the selected Jacobian rank-deficient), a Levenberg-Marquardt step
    // stands in. Each attempt has a fixed factorization budget so that a
    // degenerate geometry cannot starve the splitting loop.
    auto try_refine = [&](ConicSolution& cand) -> bool {
        if (settings.refine_steps <= 0) return false;
        if (!Q_sparse) Q_sparse = detail::sparse_Q(p);
        Vec z = z_from_xys(cand.x, project_dual_cones(p.cones, cand.y), cand.s);
        Vec res = detail::hsde_residual_map_sp(p, *Q_sparse, z);
        double rn = res.norm();
        const double rn_start = rn;
        double mu = 1e-8;
        int budget = settings.refine_steps;  // factorizations
        bool finished = false;
        auto good_enough = [&]() {
            Vec x = z.head(n);
            Vec pv = project_dual_cones(p.cones, z.segment(n, m));
            return check_optimality(p, x, pv, Vec(pv - z.segment(n, m))).max() <=
                   0.3 * settings.tol;
        };
        for (int it = 0; it < settings.refine_steps && rn > 1e-15 && budget > 0; ++it) {
            // U = (Q - I) D + I assembled through the sparse Q.
            Mat D = detail::hsde_dproject(p, z);
            Mat U = -D;
            U += Mat(*Q_sparse * D);
            U.diagonal().array() += 1.0;

            auto attempt = [&](const Vec& dz) -> bool {
                if (!dz.allFinite()) return false;
                double step = 1.0;
                for (int ls = 0; ls < 8; ++ls) {
                    Vec zn = z + step * dz;
                    if (zn[N - 1] > 1e-12) {
                        zn /= zn[N - 1];
                        Vec r2 = detail::hsde_residual_map_sp(p, *Q_sparse, zn);
                        if (r2.norm() < 0.9 * rn) {
                            z = zn;
                            res = r2;
                            rn = r2.norm();
                            return true;
                        }
                    }
                    step *= 0.5;
                }
                return false;
            };

            // Bordered Newton step first.
            Mat B = Mat::Zero(N + 1, N + 1);
            B.topLeftCorner(N, N) = U;
            Vec pz = detail::hsde_project(p, z);
            B.block(0, N, N, 1) = pz / std::max(pz.norm(), 1e-300);
            B.block(N, 0, 1, N) = z.transpose() / std::max(z.norm(), 1e-300);
            Vec ext = Vec::Zero(N + 1);
            ext.head(N) = -res;
            Eigen::PartialPivLU<Mat> lu(B);
            --budget;
            bool accepted = attempt(lu.solve(ext).head(N));

            if (!accepted && budget > 0) {
                // Damped Gauss-Newton fallback for the degenerate geometry.
                Mat UtU = U.transpose() * U;
                Vec Ut_res = U.transpose() * res;
                const double diag_scale = std::max(UtU.trace() / N, 1e-12);
                for (int trial = 0; trial < 6 && !accepted && budget > 0; ++trial) {
                    Mat A = UtU + (mu * diag_scale) * Mat::Identity(N, N);
                    Eigen::LLT<Mat> llt(A);
                    --budget;
                    if (llt.info() == Eigen::Success && attempt(llt.solve(-Ut_res))) {
                        mu = std::max(mu / 3.0, 1e-12);
                        accepted = true;
                        break;
                    }
                    mu *= 10.0;
                }
            }
            if (!accepted) break;
            if (good_enough()) {
                finished = true;
                break;
            }
        }
        finished = finished || rn <= 1e-4 * rn_start;
        // The refined point only ever replaces the candidate; the splitting
        // iterates continue on their own trajectory.
        ConicSolution trial;
        trial.x = z.head(n);
        Vec pv = project_dual_cones(p.cones, z.segment(n, m));
        trial.y = pv;
        trial.s = pv - z.segment(n, m);
        trial.residuals = check_optimality(p, trial.x, trial.y, trial.s);
        if (trial.residuals.max() < cand.residuals.max()) cand = trial;
        return finished;
    };

    int iter = 0;
    int checks_since_refine = 0;
    int forced_interval = 50;
    while (iter < settings.max_iters) {
        for (int k = 0; k < settings.check_every && iter < settings.max_iters; ++k, ++iter) {
            tmp = u + v;
            lin.solve(tmp, utilde);
            const double a = settings.over_relax;
            tmp = a * utilde + (1.0 - a) * u - v;
            Vec unew = detail::hsde_project(ps, tmp);
            v += unew - a * utilde - (1.0 - a) * u;
            u = unew;
            if (!u.allFinite() || !v.allFinite())
                throw SolverError("conic solve diverged to non-finite iterates");
        }
        ++checks_since_refine;

        ConicSolution cand;
        if (candidate(cand)) {
            // Refinement is a rescue for slow tails, not an accelerator: a
            // warm splitting run finishes cheaper than one Newton
            // factorization, so attempts fire only periodically, backing off
            // when they go nowhere.
            if (cand.residuals.max() > settings.tol &&
                checks_since_refine >= forced_interval) {
                const bool productive = try_refine(cand);
                checks_since_refine = 0;
                forced_interval = productive ? 50 : std::min(forced_interval * 2, 800);
            }
            if (cand.residuals.max() < best_res) {
                best_res = cand.residuals.max();
                sol.x = cand.x;
                sol.y = cand.y;
                sol.s = cand.s;
                sol.residuals = cand.residuals;
            }
            if (cand.residuals.max() <= settings.tol) {
                sol.x = cand.x;
                sol.y = cand.y;
                sol.s = cand.s;
                sol.residuals = cand.residuals;
                sol.status = SolveStatus::Optimal;
                break;
            }
        }

        // Infeasibility certificates, mapped back to original coordinates.
        Vec ydir = eq.unscale_y(u.segment(n, m));
        double hty = p.h.dot(ydir);
        if (hty < -1e-12) {
            Vec ycert = ydir / (-hty);
            if ((Gt * ycert).norm() <= settings.tol &&
                dual_cone_distance(p.cones, ycert) <= settings.tol) {
                sol.status = SolveStatus::PrimalInfeasible;
                sol.y = ycert;
                sol.x = Vec::Zero(n);
                sol.s = Vec::Zero(m);
                break;
            }
        }
        Vec xdir = eq.unscale_x(u.head(n));
        Vec sdir = eq.unscale_s(v.segment(n, m));
        double rtx = p.r.dot(xdir);
        if (rtx < -1e-12) {
            Vec xcert = xdir / (-rtx);
            Vec scert = sdir / (-rtx);
            if ((p.G * xcert + scert).norm() <= settings.tol &&
                cone_distance(p.cones, scert) <= settings.tol) {
                sol.status = SolveStatus::DualInfeasible;
                sol.x = xcert;
                sol.s = scert;
                sol.y = Vec::Zero(m);
                break;
            }
        }
    }

    sol.iterations = iter;
    if (sol.status == SolveStatus::Optimal) {
        sol.z = z_from_xys(sol.x, project_dual_cones(p.cones, sol.y), sol.s);
        sol.objective = p.r.dot(sol.x);
    } else if (sol.status == SolveStatus::MaxIters) {
        if (sol.x.size() == n) {
            sol.z = z_from_xys(sol.x, project_dual_cones(p.cones, sol.y), sol.s);
            sol.objective = p.r.dot(sol.x);
        }
    }
    return sol;
}

}  // namespace detail

/// Solves the cone program through the homogeneous self-dual embedding:
/// projection / linear-system splitting with over-relaxation, followed by
/// Levenberg-Marquardt polishing of the normalized residual map once the
/// iterate is close. Termination is always decided by the relative residuals
/// of the original problem. A run that exhausts its budget near the solution
/// is retried once under a different equilibration, warm-started from its
/// best point; degenerate tails are often path-dependent.
inline ConicSolution solve(const ConicProblem& p, const SolveSettings& settings = {},
                           const Vec* warm_z = nullptr) {
    SolveSettings first = settings;
    first.max_iters = std::max(1, (7 * settings.max_iters) / 10);
    ConicSolution sol = detail::solve_attempt(p, first, warm_z);
    if (sol.status != SolveStatus::MaxIters || settings.max_iters - sol.iterations <= 0)
        return sol;

    SolveSettings second = settings;
    second.max_iters = settings.max_iters - sol.iterations;
    second.equilibrate_iters = settings.equilibrate_iters == 0 ? 3 : 3 * settings.equilibrate_iters + 1;
    const bool have_warm = sol.z.size() == p.n() + p.m() + 1 && sol.z[p.n() + p.m()] > 0.0;
    ConicSolution sol2 = detail::solve_attempt(p, second, have_warm ? &sol.z : warm_z);
    sol2.iterations += sol.iterations;
    if (sol2.status != SolveStatus::MaxIters) return sol2;
    if (sol2.x.size() == p.n() && sol.x.size() == p.n())
        return sol2.residuals.max() < sol.residuals.max() ? sol2 : sol;
    return sol2.x.size() == p.n() ? sol2 : sol;
}

/// Recovers (x, y, s) from a normalized embedding point via
/// phi(z) = (u, Pi(v), Pi(v) - v) / w.
inline void recover_from_z(const ConicProblem& p, const Vec& z, Vec& x, Vec& y, Vec& s) {
    const int n = p.n(), m = p.m();
    const double w = z[n + m];
    require(w > 0.0, "recover_from_z: w must be positive");
    x = z.head(n) / w;
    Vec pv = project_dual_cones(p.cones, z.segment(n, m));
    y = pv / w;
    s = (pv - z.segment(n, m)) / w;
}

// ---------------------------------------------------------------------------
// JSON schema: { "r": [...], "h": [...],
//                "G": {"m":.., "n":.., "triplets": [[i, j, value], ...]},
//                "cones": [{"kind": "zero"|"nonneg"|"soc", "dim": ..}, ...] }
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ConicProblem& p) {
    nlohmann::json j;
    j["r"] = std::vector<double>(p.r.data(), p.r.data() + p.r.size());
    j["h"] = std::vector<double>(p.h.data(), p.h.data() + p.h.size());
    nlohmann::json trips = nlohmann::json::array();
    for (int k = 0; k < p.G.outerSize(); ++k)
        for (SpMat::InnerIterator it(p.G, k); it; ++it)
            trips.push_back({it.row(), it.col(), it.value()});
    j["G"] = {{"m", p.m()}, {"n", p.n()}, {"triplets", trips}};
    nlohmann::json cones = nlohmann::json::array();
    for (const auto& c : p.cones) {
        const char* kind = c.kind == Cone::Kind::Zero     ? "zero"
                           : c.kind == Cone::Kind::Nonneg ? "nonneg"
                                                          : "soc";
        cones.push_back({{"kind", kind}, {"dim", c.dim}});
    }
    j["cones"] = cones;
    return j;
}

inline ConicProblem conic_from_json(const nlohmann::json& j) {
    ConicProblem p;
    std::vector<double> r = j.at("r").get<std::vector<double>>();
    std::vector<double> h = j.at("h").get<std::vector<double>>();
    p.r = Eigen::Map<Vec>(r.data(), static_cast<Eigen::Index>(r.size()));
    p.h = Eigen::Map<Vec>(h.data(), static_cast<Eigen::Index>(h.size()));
    const auto& gj = j.at("G");
    int m = gj.at("m").get<int>(), n = gj.at("n").get<int>();
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& t : gj.at("triplets"))
        trips.emplace_back(t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>());
    p.G.resize(m, n);
    p.G.setFromTriplets(trips.begin(), trips.end());
    for (const auto& cj : j.at("cones")) {
        std::string kind = cj.at("kind").get<std::string>();
        int dim = cj.at("dim").get<int>();
        if (kind == "zero")
            p.cones.push_back(Cone::zero(dim));
        else if (kind == "nonneg")
            p.cones.push_back(Cone::nonneg(dim));
        else if (kind == "soc")
            p.cones.push_back(Cone::soc(dim));
        else
            throw ConfigError("unknown cone kind: " + kind);
    }
    p.validate();
    return p;
}

}  // namespace anisodrc
