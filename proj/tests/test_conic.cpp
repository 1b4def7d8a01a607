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
#include <catch2/catch_amalgamated.hpp>

#include "anisodrc/diffconic.hpp"
#include "anisodrc/rng.hpp"

using namespace anisodrc;

namespace {

SpMat dense_to_sparse(const Mat& d) {
    return d.sparseView(1.0, 1e-300);
}

/// min x s.t. x >= h0 in standard form.
ConicProblem one_dim_lp(double h0 = 1.0) {
    ConicProblem p;
    p.r = Vec::Constant(1, 1.0);
    Mat G = Mat::Constant(1, 1, -1.0);
    p.G = dense_to_sparse(G);
    p.h = Vec::Constant(1, -h0);
    p.cones = {Cone::nonneg(1)};
    return p;
}

struct RandomLp {
    ConicProblem p;
    Mat Gd;
};

/// Feasible bounded LP: Gx <= h with a strict interior point and a box.
RandomLp random_lp(int n, int m_extra, RngStream& rng, double box = 100.0) {
    Vec xhat(n);
    for (int i = 0; i < n; ++i) xhat[i] = rng.normal();
    const int m = m_extra + 2 * n;
    Mat G(m, n);
    Vec h(m);
    for (int i = 0; i < m_extra; ++i) {
        for (int j = 0; j < n; ++j) G(i, j) = rng.normal();
        h[i] = G.row(i).dot(xhat) + rng.uniform(0.1, 2.0);
    }
    for (int i = 0; i < n; ++i) {
        G.row(m_extra + 2 * i).setZero();
        G(m_extra + 2 * i, i) = 1.0;
        h[m_extra + 2 * i] = box;
        G.row(m_extra + 2 * i + 1).setZero();
        G(m_extra + 2 * i + 1, i) = -1.0;
        h[m_extra + 2 * i + 1] = box;
    }
    RandomLp out;
    out.Gd = G;
    out.p.r = Vec::NullaryExpr(n, [&](Eigen::Index) { return rng.normal(); });
    out.p.G = dense_to_sparse(G);
    out.p.h = h;
    out.p.cones = {Cone::nonneg(m)};
    return out;
}

/// Exhaustive vertex enumeration for min r'x s.t. Gx <= h (dense rows).
double vertex_enumeration_optimum(const Mat& G, const Vec& h, const Vec& r) {
    const int m = static_cast<int>(G.rows());
    const int n = static_cast<int>(G.cols());
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> idx(n);
    // Iterate over all n-subsets of rows.
    std::function<void(int, int)> rec = [&](int start, int k) {
        if (k == n) {
            Mat A(n, n);
            Vec b(n);
            for (int i = 0; i < n; ++i) {
                A.row(i) = G.row(idx[i]);
                b[i] = h[idx[i]];
            }
            Eigen::FullPivLU<Mat> lu(A);
            if (!lu.isInvertible()) return;
            Vec x = lu.solve(b);
            if (((G * x - h).array() <= 1e-8).all()) best = std::min(best, r.dot(x));
            return;
        }
        for (int i = start; i < m; ++i) {
            idx[k] = i;
            rec(i + 1, k + 1);
        }
    };
    rec(0, 0);
    return best;
}

struct RandomSocp {
    ConicProblem p;
};

/// Feasible SOCP with a strictly interior point and a bounding box.
RandomSocp random_socp(int n, int n_lin, const std::vector<int>& soc_dims, RngStream& rng) {
    Vec xhat(n);
    for (int i = 0; i < n; ++i) xhat[i] = rng.normal();
    int m = n_lin + 2 * n;
    for (int d : soc_dims) m += d;
    Mat G = Mat::Zero(m, n);
    Vec h = Vec::Zero(m);
    std::vector<Cone> cones;
    int row = 0;
    for (int i = 0; i < n_lin; ++i) {
        for (int j = 0; j < n; ++j) G(row, j) = rng.normal();
        h[row] = G.row(row).dot(xhat) + rng.uniform(0.1, 2.0);
        ++row;
    }
    for (int i = 0; i < n; ++i) {
        G(row, i) = 1.0;
        h[row] = 30.0;
        ++row;
        G(row, i) = -1.0;
        h[row] = 30.0;
        ++row;
    }
    cones.push_back(Cone::nonneg(n_lin + 2 * n));
    for (int d : soc_dims) {
        // Slack (d'x + e, Ax + c) in the cone, strictly at xhat.
        Mat A(d - 1, n);
        Vec c(d - 1), dv(n);
        for (int i = 0; i < d - 1; ++i) {
            for (int j = 0; j < n; ++j) A(i, j) = rng.normal() * 0.5;
            c[i] = rng.normal();
        }
        for (int j = 0; j < n; ++j) dv[j] = rng.normal() * 0.3;
        double head = (A * xhat + c).norm() + rng.uniform(0.2, 1.0);
        double e = head - dv.dot(xhat);
        G.row(row) = -dv.transpose();
        h[row] = e;
        ++row;
        G.block(row, 0, d - 1, n) = -A;
        h.segment(row, d - 1) = c;
        row += d - 1;
        cones.push_back(Cone::soc(d));
    }
    RandomSocp out;
    out.p.r = Vec::NullaryExpr(n, [&](Eigen::Index) { return rng.normal(); });
    out.p.G = dense_to_sparse(G);
    out.p.h = h;
    out.p.cones = cones;
    return out;
}

}  // namespace

TEST_CASE("one-dimensional LP") {
    auto p = one_dim_lp();
    auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.x[0] == Catch::Approx(1.0).margin(1e-7));
    REQUIRE(sol.y[0] == Catch::Approx(1.0).margin(1e-7));
    REQUIRE(sol.residuals.max() <= 1e-8);

    auto res = check_optimality(p, sol);
    REQUIRE(res.primal <= 1e-9);
    REQUIRE(res.dual <= 1e-9);
    REQUIRE(res.gap <= 1e-9);

    Vec xp = sol.x;
    xp[0] += 0.1;
    auto res2 = check_optimality(p, xp, sol.y, sol.s);
    REQUIRE(res2.primal >= 0.04);
}

TEST_CASE("geometric SOCP: ||(1,1)|| <= t") {
    ConicProblem p;
    p.r = Vec::Constant(1, 1.0);
    Mat G(3, 1);
    G << -1, 0, 0;
    p.G = dense_to_sparse(G);
    p.h = Vec(3);
    p.h << 0, 1, 1;
    p.cones = {Cone::soc(3)};
    auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.x[0] == Catch::Approx(std::sqrt(2.0)).margin(1e-7));
}

TEST_CASE("zero problem") {
    ConicProblem p;
    p.r = Vec::Zero(1);
    p.G = SpMat(1, 1);
    p.h = Vec::Zero(1);
    p.cones = {Cone::zero(1)};
    auto res = check_optimality(p, Vec::Zero(1), Vec::Zero(1), Vec::Zero(1));
    REQUIRE(res.primal == 0.0);
    REQUIRE(res.dual == 0.0);
    REQUIRE(res.gap == 0.0);
    auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE(sol.x.isZero(1e-9));
}

TEST_CASE("random LPs match vertex enumeration") {
    RngStream rng(100, 1, 0);
    for (int rep = 0; rep < 30; ++rep) {
        const int n = 2 + static_cast<int>(rng.below(5));  // up to 6
        const int m_extra = n + 1 + static_cast<int>(rng.below(4));
        auto lp = random_lp(n, m_extra, rng, 40.0);
        auto sol = solve(lp.p);
        REQUIRE(sol.status == SolveStatus::Optimal);
        REQUIRE(sol.residuals.max() <= 1e-8);
        double oracle = vertex_enumeration_optimum(lp.Gd, lp.p.h, lp.p.r);
        REQUIRE(sol.objective == Catch::Approx(oracle).margin(1e-6).epsilon(1e-6));
    }
}

TEST_CASE("solver invariants on random cone programs") {
    RngStream rng(200, 2, 0);
    for (int rep = 0; rep < 15; ++rep) {
        auto sp = random_socp(5, 4, {3, 4}, rng);
        auto sol = solve(sp.p);
        REQUIRE(sol.status == SolveStatus::Optimal);
        const int m = sp.p.m();

        // Complementary slackness over the cone product.
        REQUIRE(std::abs(sol.s.dot(sol.y)) <= 1e-8 * m);

        // Cone membership.
        REQUIRE(cone_distance(sp.p.cones, sol.s) <= 1e-7);
        REQUIRE(dual_cone_distance(sp.p.cones, sol.y) <= 1e-7);

        // Recovery consistency through phi.
        Vec x, y, s;
        recover_from_z(sp.p, sol.z, x, y, s);
        REQUIRE((x - sol.x).norm() <= 1e-9 * (1 + sol.x.norm()));
        REQUIRE((y - sol.y).norm() <= 1e-9 * (1 + sol.y.norm()));
        REQUIRE((s - sol.s).norm() <= 1e-9 * (1 + sol.s.norm()));

        // Normalized residual map vanishes at the solution.
        Mat Q = detail::dense_Q(sp.p);
        REQUIRE(detail::hsde_residual_map(sp.p, Q, sol.z).norm() <= 1e-6);

        // Homogeneity: scaling all data by alpha > 0 leaves x* unchanged.
        ConicProblem scaled = sp.p;
        const double alpha = 3.7;
        scaled.r *= alpha;
        scaled.h *= alpha;
        scaled.G = SpMat(alpha * sp.p.G);
        auto sol2 = solve(scaled);
        REQUIRE(sol2.status == SolveStatus::Optimal);
        REQUIRE((sol2.x - sol.x).norm() <= 1e-6 * (1 + sol.x.norm()));
    }
}

TEST_CASE("infeasibility classification") {
    // x <= -1 and x >= 1 simultaneously.
    ConicProblem p;
    p.r = Vec::Constant(1, 1.0);
    Mat G(2, 1);
    G << 1, -1;
    p.G = dense_to_sparse(G);
    p.h = Vec(2);
    p.h << -1, -1;
    p.cones = {Cone::nonneg(2)};
    auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::PrimalInfeasible);

    // min x with x <= 1 only: unbounded below.
    ConicProblem q;
    q.r = Vec::Constant(1, 1.0);
    Mat G2(1, 1);
    G2 << 1;
    q.G = dense_to_sparse(G2);
    q.h = Vec::Constant(1, 1.0);
    q.cones = {Cone::nonneg(1)};
    auto sol2 = solve(q);
    REQUIRE(sol2.status == SolveStatus::DualInfeasible);
}

TEST_CASE("max_iters is surfaced, never silently optimal") {
    RngStream rng(300, 3, 0);
    auto sp = random_socp(6, 5, {3}, rng);
    SolveSettings s;
    s.max_iters = 3;
    s.refine_steps = 0;
    auto sol = solve(sp.p, s);
    REQUIRE(sol.status == SolveStatus::MaxIters);
}

TEST_CASE("json dump/load round trip") {
    RngStream rng(400, 4, 0);
    auto sp = random_socp(4, 3, {3}, rng);
    auto j = to_json(sp.p);
    REQUIRE(j.contains("r"));
    REQUIRE(j.contains("G"));
    REQUIRE(j["G"].contains("triplets"));
    REQUIRE(j.contains("h"));
    REQUIRE(j.contains("cones"));
    auto p2 = conic_from_json(j);
    REQUIRE(p2.n() == sp.p.n());
    REQUIRE(p2.m() == sp.p.m());
    auto s1 = solve(sp.p);
    auto s2 = solve(p2);
    REQUIRE(s1.objective == Catch::Approx(s2.objective).margin(1e-9));
}

TEST_CASE("validation rejects bad problems") {
    ConicProblem p;
    p.r = Vec::Constant(1, 1.0);
    p.G = SpMat(1, 1);
    p.h = Vec::Constant(1, std::numeric_limits<double>::quiet_NaN());
    p.cones = {Cone::nonneg(1)};
    REQUIRE_THROWS_AS(p.validate(), Error);

    ConicProblem q = one_dim_lp();
    q.cones = {Cone::nonneg(2)};
    REQUIRE_THROWS_AS(q.validate(), DimensionError);
}

// ------------------------- differentiation ---------------------------------

TEST_CASE("derivative_forward basics") {
    auto p = one_dim_lp();
    auto sol = solve(p);
    auto d0 = DataPerturbation::zero(p);
    auto s0 = derivative_forward(p, sol, d0);
    REQUIRE(s0.dx.isZero(1e-12));
    REQUIRE(s0.dy.isZero(1e-12));
    REQUIRE(s0.ds.isZero(1e-12));

    // x* = h0 exactly, so dh -> dx with unit gain. Here h = -h0: the solution
    // is x* = -h, so dx/dh = -1 in standard-form coordinates.
    auto d = DataPerturbation::zero(p);
    d.dh[0] = -1.0;  // move h0 up by one
    auto s = derivative_forward(p, sol, d);
    REQUIRE(s.dx[0] == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("derivative_forward matches finite differences on random SOCPs") {
    RngStream rng(500, 5, 0);
    int checked = 0;
    for (int rep = 0; rep < 12 && checked < 6; ++rep) {
        auto sp = random_socp(6, 4, {3, 3}, rng);
        SolveSettings st;
        st.tol = 1e-11;
        auto sol = solve(sp.p, st);
        if (sol.status != SolveStatus::Optimal) continue;

        DataPerturbation d = DataPerturbation::zero(sp.p);
        Mat dGd = Mat::Zero(sp.p.m(), sp.p.n());
        for (int i = 0; i < sp.p.m(); ++i)
            for (int j = 0; j < sp.p.n(); ++j) dGd(i, j) = 0.2 * rng.normal();
        d.dG = dGd.sparseView(1.0, 1e-300);
        for (int i = 0; i < sp.p.m(); ++i) d.dh[i] = 0.2 * rng.normal();
        for (int j = 0; j < sp.p.n(); ++j) d.dr[j] = 0.2 * rng.normal();

        SolutionSensitivity sens;
        try {
            sens = derivative_forward(sp.p, sol, d);
        } catch (const SolverError&) {
            continue;  // degenerate instance; skip
        }

        const double hstep = 1e-5;
        auto perturbed = [&](double sign) {
            ConicProblem q = sp.p;
            q.G = SpMat(sp.p.G + SpMat((sign * hstep) * d.dG));
            q.h = sp.p.h + sign * hstep * d.dh;
            q.r = sp.p.r + sign * hstep * d.dr;
            return solve(q, st);
        };
        auto plus = perturbed(1.0), minus = perturbed(-1.0);
        if (plus.status != SolveStatus::Optimal || minus.status != SolveStatus::Optimal) continue;
        Vec fd = (plus.x - minus.x) / (2 * hstep);
        double rel = (fd - sens.dx).norm() / (1.0 + fd.norm());
        // Kink detection: compare one-sided slopes; skip non-smooth points.
        Vec fwd = (plus.x - sol.x) / hstep;
        Vec bwd = (sol.x - minus.x) / hstep;
        if ((fwd - bwd).norm() > 1e-3 * (1.0 + fd.norm())) continue;
        REQUIRE(rel <= 1e-4);
        ++checked;
    }
    REQUIRE(checked >= 3);
}

TEST_CASE("derivative_adjoint basics and pairing identity") {
    auto p = one_dim_lp();
    auto sol = solve(p);
    auto g0 = derivative_adjoint(p, sol, Vec::Zero(1));
    REQUIRE(g0.dG.isZero(1e-12));
    REQUIRE(g0.dh.isZero(1e-12));
    REQUIRE(g0.dr.isZero(1e-12));

    auto g1 = derivative_adjoint(p, sol, Vec::Constant(1, 1.0));
    REQUIRE(g1.dh[0] == Catch::Approx(-1.0).margin(1e-8));

    RngStream rng(600, 6, 0);
    auto sp = random_socp(5, 4, {3}, rng);
    SolveSettings st;
    st.tol = 1e-11;
    auto s2 = solve(sp.p, st);
    REQUIRE(s2.status == SolveStatus::Optimal);
    SolutionDerivative deriv(sp.p, s2);
    for (int rep = 0; rep < 20; ++rep) {
        Vec gx(sp.p.n());
        for (int i = 0; i < gx.size(); ++i) gx[i] = rng.normal();
        DataPerturbation d = DataPerturbation::zero(sp.p);
        Mat dGd(sp.p.m(), sp.p.n());
        for (int i = 0; i < sp.p.m(); ++i)
            for (int j = 0; j < sp.p.n(); ++j) dGd(i, j) = rng.normal();
        d.dG = dGd.sparseView(1.0, 1e-300);
        for (int i = 0; i < sp.p.m(); ++i) d.dh[i] = rng.normal();
        for (int j = 0; j < sp.p.n(); ++j) d.dr[j] = rng.normal();

        double lhs = gx.dot(deriv.forward(d).dx);
        double rhs = pair(deriv.adjoint(gx), d);
        REQUIRE(lhs == Catch::Approx(rhs).margin(1e-9 * (1 + std::abs(lhs))));
    }
}

TEST_CASE("forward map is linear in the perturbation") {
    RngStream rng(700, 7, 0);
    auto sp = random_socp(5, 3, {3}, rng);
    auto sol = solve(sp.p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    SolutionDerivative deriv(sp.p, sol);

    auto rand_pert = [&]() {
        DataPerturbation d = DataPerturbation::zero(sp.p);
        Mat dGd(sp.p.m(), sp.p.n());
        for (int i = 0; i < sp.p.m(); ++i)
            for (int j = 0; j < sp.p.n(); ++j) dGd(i, j) = rng.normal();
        d.dG = dGd.sparseView(1.0, 1e-300);
        for (int i = 0; i < sp.p.m(); ++i) d.dh[i] = rng.normal();
        for (int j = 0; j < sp.p.n(); ++j) d.dr[j] = rng.normal();
        return d;
    };
    auto d1 = rand_pert(), d2 = rand_pert();
    const double alpha = 1.7;
    DataPerturbation comb = DataPerturbation::zero(sp.p);
    comb.dG = SpMat(alpha * d1.dG + d2.dG);
    comb.dh = alpha * d1.dh + d2.dh;
    comb.dr = alpha * d1.dr + d2.dr;
    auto s1 = deriv.forward(d1);
    auto s2 = deriv.forward(d2);
    auto sc = deriv.forward(comb);
    REQUIRE((sc.dx - (alpha * s1.dx + s2.dx)).cwiseAbs().maxCoeff() <= 1e-10);
    REQUIRE((sc.dy - (alpha * s1.dy + s2.dy)).cwiseAbs().maxCoeff() <= 1e-10);
    REQUIRE((sc.ds - (alpha * s1.ds + s2.ds)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("factorization reuse is bitwise consistent") {
    RngStream rng(800, 8, 0);
    auto sp = random_socp(5, 3, {4}, rng);
    auto sol = solve(sp.p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    SolutionDerivative shared(sp.p, sol);
    for (int k = 0; k < 5; ++k) {
        DataPerturbation d = DataPerturbation::zero(sp.p);
        d.dh[k % sp.p.m()] = 1.0;
        auto a = shared.forward(d);
        SolutionDerivative fresh(sp.p, sol);
        auto b = fresh.forward(d);
        REQUIRE((a.dx.array() == b.dx.array()).all());
        REQUIRE((a.dy.array() == b.dy.array()).all());
        REQUIRE((a.ds.array() == b.ds.array()).all());
    }
}

TEST_CASE("degenerate problems are rejected with a clear error") {
    // Non-unique optimal set: min x1 + x2 s.t. x1 + x2 >= 1, x >= 0.
    ConicProblem p;
    p.r = Vec::Ones(2);
    Mat G(3, 2);
    G << -1, -1, -1, 0, 0, -1;
    p.G = dense_to_sparse(G);
    p.h = Vec(3);
    p.h << -1, 0, 0;
    p.cones = {Cone::nonneg(3)};
    auto sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    REQUIRE_THROWS_AS(SolutionDerivative(p, sol), SolverError);

    // Non-optimal status is a precondition error.
    ConicSolution bad = sol;
    bad.status = SolveStatus::MaxIters;
    REQUIRE_THROWS_AS(SolutionDerivative(p, bad), Error);
}
