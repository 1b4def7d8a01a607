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

#include "anisodrc/conic.hpp"

namespace anisodrc {

/// Direction in problem-data space.
struct DataPerturbation {
    SpMat dG;
    Vec dh;
    Vec dr;

    static DataPerturbation zero(const ConicProblem& p) {
        DataPerturbation d;
        d.dG.resize(p.m(), p.n());
        d.dh = Vec::Zero(p.m());
        d.dr = Vec::Zero(p.n());
        return d;
    }
};

/// Gradient in problem-data space (adjoint-mode output; dG is dense because
/// the adjoint of the skew embedding is a rank-two outer product).
struct DataGradient {
    Mat dG;
    Vec dh;
    Vec dr;
};

inline double pair(const DataGradient& g, const DataPerturbation& d) {
    double acc = g.dh.dot(d.dh) + g.dr.dot(d.dr);
    for (int k = 0; k < d.dG.outerSize(); ++k)
        for (SpMat::InnerIterator it(d.dG, k); it; ++it) acc += g.dG(it.row(), it.col()) * it.value();
    return acc;
}

struct SolutionSensitivity {
    Vec dx;
    Vec dy;
    Vec ds;
};

/// What to do when the quotient residual-map Jacobian is singular, i.e. the
/// solution is not unique (the paper's uniqueness assumption fails).
/// Strict raises "degenerate solution"; MinNorm switches to the minimum-norm
/// least-squares solve, which leaves the well-determined solution coordinates
/// correct and picks the zero element along the flat directions. CVaR-style
/// problems routinely have flat auxiliary coordinates at optimum, so the
/// control pipeline uses MinNorm.
enum class DegeneracyPolicy { Strict, MinNorm };

/// Differentiates the solution map of a solved cone program with respect to
/// its data (G, h, r), in forward and adjoint modes.
///
/// Assembled once per solved problem: the generalized Jacobian element
/// [U V] of the normalized residual map N(z, Q) at the (renormalized) point z
/// is fixed by the cone-projection kink rules, U is LU-factored, and every
/// directional derivative reuses the factorization.
class SolutionDerivative {
  public:
    SolutionDerivative(const ConicProblem& p, const ConicSolution& sol,
                       DegeneracyPolicy policy = DegeneracyPolicy::Strict)
        : p_(p) {
        require(sol.status == SolveStatus::Optimal,
                "SolutionDerivative: solution status must be optimal");
        const int n = p.n(), m = p.m();
        const int N = n + m + 1;
        require(sol.z.size() == N && sol.z[N - 1] > 0.0,
                "SolutionDerivative: missing or invalid embedding point");
        z_ = sol.z / sol.z[N - 1];  // renormalize once; w == 1 below

        x_ = z_.head(n);
        Vec vpart = z_.segment(n, m);
        Dv_ = Mat::Zero(m, m);
        int off = 0;
        for (const auto& c : p.cones) {
            Dv_.block(off, off, c.dim, c.dim) = dproject_dual_cone(c, vpart.segment(off, c.dim));
            off += c.dim;
        }
        y_ = Vec(m);
        s_ = Vec(m);
        off = 0;
        for (const auto& c : p.cones) {
            Vec pv = project_dual_cone(c, vpart.segment(off, c.dim));
            y_.segment(off, c.dim) = pv;
            s_.segment(off, c.dim) = pv - vpart.segment(off, c.dim);
            off += c.dim;
        }

        Mat Q = detail::dense_Q(p);
        Mat D = Mat::Zero(N, N);
        D.topLeftCorner(n, n).setIdentity();
        D.block(n, n, m, m) = Dv_;
        D(N - 1, N - 1) = 1.0;  // w = 1 > 0
        U_ = (Q - Mat::Identity(N, N)) * D + Mat::Identity(N, N);

        // N(., Q) is positively homogeneous of degree 0, so U always carries
        // the null pair (z, Pi(z)): U z = N(z) = 0 and U' Pi(z) = 0 at the
        // solution. The skew structure keeps every right-hand side we use
        // orthogonal to the left null vector, and the recovery map phi kills
        // the z direction, so the derivative is well defined on the quotient.
        // We solve through the bordered matrix [[U, Pi(z)], [z', 0]], which is
        // nonsingular exactly when the solution is nondegenerate.
        Vec pz(N);
        pz.head(n) = x_;
        pz.segment(n, m) = y_;
        pz[N - 1] = 1.0;
        B_ = Mat::Zero(N + 1, N + 1);
        B_.topLeftCorner(N, N) = U_;
        B_.block(0, N, N, 1) = pz / pz.norm();
        B_.block(N, 0, 1, N) = z_.transpose() / z_.norm();
        lu_.compute(B_);
        const double rc = lu_.rcond();
        if (!(rc >= 1e-12)) {  // also catches the NaN of an exactly singular factor
            if (policy == DegeneracyPolicy::Strict)
                throw SolverError(
                    "degenerate solution: the residual-map Jacobian is numerically singular "
                    "(non-unique solution or active-set degeneracy)");
            used_fallback_ = true;
            cod_.emplace(B_);
            cod_t_.emplace(Mat(B_.transpose()));
        }
    }

    /// Solves U q = rhs on the quotient (component along z fixed to zero),
    /// falling back to a minimum-norm least-squares solve when the direct
    /// solve is inaccurate.
    Vec solve_U(const Vec& rhs) const {
        const int N = static_cast<int>(rhs.size());
        Vec ext = Vec::Zero(N + 1);
        ext.head(N) = rhs;
        Vec q;
        if (cod_) {
            q = cod_->solve(ext);
        } else {
            q = lu_.solve(ext);
            if ((B_ * q - ext).norm() > 1e-6 * (1.0 + rhs.norm())) {
                used_fallback_ = true;
                cod_.emplace(B_);
                cod_t_.emplace(Mat(B_.transpose()));
                q = cod_->solve(ext);
            }
        }
        return q.head(N);
    }

    Vec solve_Ut(const Vec& rhs) const {
        const int N = static_cast<int>(rhs.size());
        Vec ext = Vec::Zero(N + 1);
        ext.head(N) = rhs;
        Vec q;
        if (cod_t_) {
            q = cod_t_->solve(ext);
        } else {
            q = lu_.transpose().solve(ext);
            if ((B_.transpose() * q - ext).norm() > 1e-6 * (1.0 + rhs.norm())) {
                used_fallback_ = true;
                cod_.emplace(B_);
                cod_t_.emplace(Mat(B_.transpose()));
                q = cod_t_->solve(ext);
            }
        }
        return q.head(N);
    }

    /// Forward mode: data direction -> (dx, dy, ds).
    SolutionSensitivity forward(const DataPerturbation& d) const {
        const int n = p_.n(), m = p_.m();
        require_dim(d.dG.rows() == m && d.dG.cols() == n && d.dh.size() == m && d.dr.size() == n,
                    "derivative_forward: perturbation dimensions mismatch");
        // dQ * Pi(z) with Pi(z) = (x, y, 1).
        Vec g(n + m + 1);
        g.head(n) = SpMat(d.dG.transpose()) * y_ + d.dr;
        g.segment(n, m) = -(d.dG * x_) + d.dh;
        g[n + m] = -d.dr.dot(x_) - d.dh.dot(y_);

        Vec dz = solve_U(-g);

        SolutionSensitivity out;
        const double dw = dz[n + m];
        out.dx = dz.head(n) - x_ * dw;
        out.dy = Dv_ * dz.segment(n, m) - y_ * dw;
        out.ds = Dv_ * dz.segment(n, m) - dz.segment(n, m) - s_ * dw;
        return out;
    }

    /// Adjoint mode: gradient in x -> gradient in (G, h, r) such that
    /// <gx, forward(d).dx> == <adjoint(gx), d> for every direction d.
    DataGradient adjoint(const Vec& gx) const {
        const int n = p_.n(), m = p_.m();
        require_dim(gx.size() == n, "derivative_adjoint: gx dimension mismatch");
        Vec gz(n + m + 1);
        gz.head(n) = gx;
        gz.segment(n, m).setZero();
        gz[n + m] = -x_.dot(gx);

        Vec q = solve_Ut(-gz);

        DataGradient out;
        const Vec qu = q.head(n);
        const Vec qv = q.segment(n, m);
        const double qw = q[n + m];
        out.dG = y_ * qu.transpose() - qv * x_.transpose();
        out.dh = qv - qw * y_;
        out.dr = qu - qw * x_;
        return out;
    }

    /// Adjoint with a general cotangent (gx, gy, gs).
    DataGradient adjoint_full(const Vec& gx, const Vec& gy, const Vec& gs) const {
        const int n = p_.n(), m = p_.m();
        Vec gz(n + m + 1);
        gz.head(n) = gx;
        gz.segment(n, m) = Dv_.transpose() * (gy + gs) - gs;
        gz[n + m] = -x_.dot(gx) - y_.dot(gy) - s_.dot(gs);

        Vec q = solve_Ut(-gz);

        DataGradient out;
        const Vec qu = q.head(n);
        const Vec qv = q.segment(n, m);
        const double qw = q[n + m];
        out.dG = y_ * qu.transpose() - qv * x_.transpose();
        out.dh = qv - qw * y_;
        out.dr = qu - qw * x_;
        return out;
    }

    bool used_least_squares_fallback() const { return used_fallback_; }
    const Vec& x() const { return x_; }
    const Vec& y() const { return y_; }
    const Vec& s() const { return s_; }

  private:
    ConicProblem p_;
    Vec z_, x_, y_, s_;
    Mat Dv_;
    Mat U_;
    Mat B_;
    Eigen::PartialPivLU<Mat> lu_;
    mutable std::optional<Eigen::CompleteOrthogonalDecomposition<Mat>> cod_;
    mutable std::optional<Eigen::CompleteOrthogonalDecomposition<Mat>> cod_t_;
    mutable bool used_fallback_ = false;
};

inline SolutionSensitivity derivative_forward(const ConicProblem& p, const ConicSolution& sol,
                                              const DataPerturbation& d) {
    return SolutionDerivative(p, sol).forward(d);
}

inline DataGradient derivative_adjoint(const ConicProblem& p, const ConicSolution& sol,
                                       const Vec& gx) {
    return SolutionDerivative(p, sol).adjoint(gx);
}

}  // namespace anisodrc
