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

#include "anisodrc/cones.hpp"
#include "anisodrc/metric.hpp"
#include "anisodrc/rng.hpp"
#include "anisodrc/system.hpp"

using namespace anisodrc;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    int i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Mat random_spd(int d, RngStream& rng, double lo = 0.5, double hi = 3.0) {
    Mat Q(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) Q(i, j) = rng.normal();
    Eigen::HouseholderQR<Mat> qr(Q);
    Mat U = qr.householderQ();
    Vec ev(d);
    for (int i = 0; i < d; ++i) ev[i] = rng.uniform(lo, hi);
    Mat m = U * ev.asDiagonal() * U.transpose();
    return 0.5 * (m + m.transpose());
}

}  // namespace

TEST_CASE("rng streams are deterministic and addressable") {
    RngStream a(42, 1, 7), b(42, 1, 7), c(42, 2, 7);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    bool differs = false;
    RngStream a2(42, 1, 7);
    for (int i = 0; i < 10; ++i) differs |= (a2.next_u64() != c.next_u64());
    REQUIRE(differs);
    RngStream u(1, 1, 1);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform();
        REQUIRE(x >= 0.0);
        REQUIRE(x < 1.0);
    }
}

TEST_CASE("cone projections: frozen examples") {
    REQUIRE(project_cone(Cone::nonneg(2), vec({-1, 2})).isApprox(vec({0, 2})));
    REQUIRE(project_cone(Cone::soc(3), vec({5, 3, 4})).isApprox(vec({5, 3, 4})));
    // Boundary projection of (0, 3, 4): ((t+||z||)/2)(1, z/||z||).
    Vec p = project_cone(Cone::soc(3), vec({0, 3, 4}));
    REQUIRE(p.isApprox(vec({2.5, 1.5, 2.0}), 1e-14));
    REQUIRE(project_cone(Cone::zero(3), vec({1, -2, 3})).isZero());
    // Polar interior maps to the apex.
    REQUIRE(project_cone(Cone::soc(3), vec({-10, 1, 1})).isZero());
}

TEST_CASE("cone projection jacobians") {
    Mat J = dproject_cone(Cone::nonneg(2), vec({-1, 2}));
    REQUIRE(J.isApprox(Mat(Vec(vec({0, 1})).asDiagonal())));

    REQUIRE(dproject_cone(Cone::soc(3), vec({10, 3, 4})).isIdentity(1e-14));

    // Finite differences at a smooth point of the soc projection.
    Vec v0 = vec({0, 3, 4});
    Mat Js = dproject_cone(Cone::soc(3), v0);
    const double hstep = 1e-6;
    for (int k = 0; k < 3; ++k) {
        Vec e = Vec::Zero(3);
        e[k] = hstep;
        Vec fd = (project_cone(Cone::soc(3), v0 + e) - project_cone(Cone::soc(3), v0 - e)) /
                 (2 * hstep);
        REQUIRE((fd - Js.col(k)).cwiseAbs().maxCoeff() < 1e-5);
    }

    // Apex rule.
    REQUIRE(dproject_cone(Cone::soc(4), Vec::Zero(4)).isApprox(0.5 * Mat::Identity(4, 4)));
}

TEST_CASE("cone projection properties: idempotent, non-expansive, psd jacobian") {
    RngStream rng(7, 99, 0);
    std::vector<Cone> kinds = {Cone::zero(4), Cone::nonneg(4), Cone::soc(4)};
    for (const auto& c : kinds) {
        for (int it = 0; it < 1000; ++it) {
            Vec u(4), v(4);
            for (int i = 0; i < 4; ++i) {
                u[i] = rng.normal() * 2;
                v[i] = rng.normal() * 2;
            }
            Vec pu = project_cone(c, u), pv = project_cone(c, v);
            REQUIRE((project_cone(c, pu) - pu).norm() <= 1e-12 * (1 + pu.norm()));
            REQUIRE((pu - pv).norm() <= (u - v).norm() + 1e-12);
        }
        for (int it = 0; it < 50; ++it) {
            Vec u(4);
            for (int i = 0; i < 4; ++i) u[i] = rng.normal() * 2;
            Mat J = dproject_cone(c, u);
            REQUIRE((J - J.transpose()).cwiseAbs().maxCoeff() < 1e-12);
            Eigen::SelfAdjointEigenSolver<Mat> es(J);
            REQUIRE(es.eigenvalues().minCoeff() >= -1e-9);
            REQUIRE(es.eigenvalues().maxCoeff() <= 1.0 + 1e-9);
        }
    }
}

TEST_CASE("build_stacked matches explicit unrolling") {
    LinearSystem sys;
    sys.A = Mat::Constant(1, 1, 2.0);
    sys.B = Mat::Constant(1, 1, 1.0);
    sys.Fx = Mat::Constant(1, 1, 1.0);
    sys.Fu = Mat::Constant(1, 1, 0.0);
    sys.f = Vec::Zero(1);

    auto sd1 = build_stacked(sys, 1);
    REQUIRE(sd1.L.isApprox((Mat(1, 2) << 2, 1).finished()));
    REQUIRE(sd1.H.isApprox(Mat::Identity(1, 1)));

    auto sd2 = build_stacked(sys, 2);
    Mat L2(2, 3);
    L2 << 2, 1, 0, 4, 2, 1;
    Mat H2(2, 2);
    H2 << 1, 0, 2, 1;
    REQUIRE(sd2.L.isApprox(L2));
    REQUIRE(sd2.H.isApprox(H2));
}

TEST_CASE("build_stacked nilpotent A") {
    LinearSystem sys;
    sys.A = Mat::Zero(2, 2);
    sys.B = (Mat(2, 1) << 1.0, -1.0).finished();
    sys.Fx = Mat::Identity(2, 2);
    sys.Fu = Mat::Zero(1, 2);
    sys.f = Vec::Zero(2);
    auto sd = build_stacked(sys, 3);
    for (int t = 0; t < 3; ++t) REQUIRE(sd.L.block(2 * t, 0, 2, 2).isZero());
    REQUIRE(sd.H.isApprox(Mat::Identity(6, 6)));
}

TEST_CASE("stacked dynamics reproduce simulation on random tuples") {
    RngStream rng(11, 5, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const int nx = 1 + static_cast<int>(rng.below(3));
        const int nu = 1 + static_cast<int>(rng.below(2));
        const int T = 1 + static_cast<int>(rng.below(4));
        LinearSystem sys;
        sys.A = Mat::NullaryExpr(nx, nx, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
        sys.B = Mat::NullaryExpr(nx, nu, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
        sys.Fx = Mat::Identity(nx, nx);
        sys.Fu = Mat::Zero(nu, nx);
        sys.f = Vec::Zero(nx);
        auto sd = build_stacked(sys, T);
        Vec x0(nx), u(nu * T), w(nx * T);
        for (int i = 0; i < nx; ++i) x0[i] = rng.normal();
        for (int i = 0; i < nu * T; ++i) u[i] = rng.normal();
        for (int i = 0; i < nx * T; ++i) w[i] = rng.normal();
        // Direct simulation.
        Vec y(nx * T);
        Vec x = x0;
        for (int t = 0; t < T; ++t) {
            x = sys.A * x + sys.B * u.segment(t * nu, nu) + w.segment(t * nx, nx);
            y.segment(t * nx, nx) = x;
        }
        Vec z(nx + nu * T);
        z << x0, u;
        Vec y_stacked = sd.L * z + sd.H * w;
        REQUIRE((y - y_stacked).norm() <= 1e-10 * (1 + y.norm()));
    }
}

TEST_CASE("rollout examples") {
    LinearSystem ident;
    ident.A = Mat::Identity(2, 2);
    ident.B = Mat::Zero(2, 1);
    ident.Fx = Mat::Identity(2, 2);
    ident.Fu = Mat::Zero(1, 2);
    ident.f = Vec::Zero(2);
    Vec x0 = vec({3, -1});
    auto traj = rollout(ident, [](const Vec&, int) { return Vec::Zero(1); }, x0, Vec::Zero(4));
    for (const auto& s : traj.states) REQUIRE(s.isApprox(x0));
    REQUIRE(traj.reconstruction_residual(ident) <= 1e-12);

    LinearSystem scal;
    scal.A = Mat::Constant(1, 1, 2.0);
    scal.B = Mat::Constant(1, 1, 1.0);
    scal.Fx = Mat::Constant(1, 1, 1.0);
    scal.Fu = Mat::Constant(1, 1, 0.0);
    scal.f = Vec::Zero(1);
    auto t2 = rollout(scal, [](const Vec&, int) { return Vec::Zero(1); }, vec({1}), vec({1, 1}));
    REQUIRE(t2.states[0][0] == 1.0);
    REQUIRE(t2.states[1][0] == 3.0);
    REQUIRE(t2.states[2][0] == 7.0);

    // Deadbeat scalar controller u = -A x / B.
    auto t3 = rollout(scal, [&](const Vec& x, int) { return Vec::Constant(1, -2.0 * x[0]); },
                      vec({5}), Vec::Zero(3));
    REQUIRE(t3.states[1][0] == 0.0);
    REQUIRE(t3.states[2][0] == 0.0);
    REQUIRE(t3.states[3][0] == 0.0);
}

TEST_CASE("rollout controller failure carries the partial trajectory") {
    LinearSystem scal;
    scal.A = Mat::Constant(1, 1, 1.0);
    scal.B = Mat::Constant(1, 1, 1.0);
    scal.Fx = Mat::Constant(1, 1, 1.0);
    scal.Fu = Mat::Constant(1, 1, 0.0);
    scal.f = Vec::Zero(1);
    auto controller = [](const Vec&, int t) -> Vec {
        if (t == 1) throw std::runtime_error("boom");
        return Vec::Zero(1);
    };
    try {
        rollout(scal, controller, vec({1}), Vec::Zero(3));
        FAIL("expected RolloutError");
    } catch (const RolloutError& e) {
        REQUIRE(e.step() == 1);
        REQUIRE(e.partial().states.size() == 2);
        REQUIRE(e.partial().inputs.size() == 1);
    }
}

TEST_CASE("rollout determinism under identical seeds") {
    LinearSystem scal;
    scal.A = Mat::Constant(1, 1, 0.9);
    scal.B = Mat::Constant(1, 1, 1.0);
    scal.Fx = Mat::Constant(1, 1, 1.0);
    scal.Fu = Mat::Constant(1, 1, 0.0);
    scal.f = Vec::Zero(1);
    auto model = DisturbanceModel::gaussian(Vec::Zero(1), Mat::Identity(1, 1));
    auto run = [&]() {
        RngStream s(123, purpose::kEvalScenario, 4);
        Vec w = sample_disturbance(model, 6, s);
        return rollout(scal, [](const Vec& x, int) { return Vec::Constant(1, -0.1 * x[0]); },
                       vec({1}), w);
    };
    auto a = run(), b = run();
    for (std::size_t i = 0; i < a.states.size(); ++i)
        REQUIRE(a.states[i][0] == b.states[i][0]);  // bitwise
}

TEST_CASE("eval_pwa_cost") {
    Trajectory traj;
    traj.states = {Vec::Zero(2), Vec::Zero(2)};
    traj.inputs = {Vec::Zero(1)};
    traj.disturbances = {Vec::Zero(2)};

    PwaCost single;
    single.pieces.push_back({Vec::Zero(2), Vec::Zero(3), 4.0});
    auto [v1, a1] = eval_pwa_cost(single, traj);
    REQUIRE(v1 == 4.0);
    REQUIRE(a1 == 0);

    // Mirrored two-piece cost ties at a zero trajectory; lowest index wins.
    PwaCost mirrored;
    Vec a = vec({10, 2});
    Vec b = vec({10, 10, 10});
    mirrored.pieces.push_back({a, b, 0.0});
    mirrored.pieces.push_back({-a, -b, 0.0});
    auto [v2, a2] = eval_pwa_cost(mirrored, traj);
    REQUIRE(v2 == 0.0);
    REQUIRE(a2 == 0);

    // Brute-force oracle on a random 3-piece cost.
    RngStream rng(3, 1, 0);
    Trajectory rt;
    rt.states = {vec({1, -2}), vec({0.5, 1}), vec({2, 0})};
    rt.inputs = {vec({0.3}), vec({-1})};
    rt.disturbances = {Vec::Zero(2), Vec::Zero(2)};
    PwaCost three;
    for (int j = 0; j < 3; ++j) {
        Vec aj(4), bj(4);
        for (int i = 0; i < 4; ++i) {
            aj[i] = rng.normal();
            bj[i] = rng.normal();
        }
        three.pieces.push_back({aj, bj, rng.normal()});
    }
    double best = -1e300;
    int arg = -1;
    for (int j = 0; j < 3; ++j) {
        const auto& pc = three.pieces[j];
        double v = pc.c;
        v += pc.b[0] * rt.states[0][0] + pc.b[1] * rt.states[0][1];
        v += pc.a[0] * rt.states[1][0] + pc.a[1] * rt.states[1][1];
        v += pc.a[2] * rt.states[2][0] + pc.a[3] * rt.states[2][1];
        v += pc.b[2] * rt.inputs[0][0] + pc.b[3] * rt.inputs[1][0];
        if (v > best) {
            best = v;
            arg = j;
        }
    }
    auto [v3, a3] = eval_pwa_cost(three, rt);
    REQUIRE(v3 == Catch::Approx(best).margin(1e-12));
    REQUIRE(a3 == arg);
    REQUIRE(v3 >= piece_value(three.pieces[0], rt) - 1e-12);
    REQUIRE(v3 >= piece_value(three.pieces[1], rt) - 1e-12);
    REQUIRE(v3 >= piece_value(three.pieces[2], rt) - 1e-12);
}

TEST_CASE("eval_constraint_max") {
    LinearSystem sys;
    sys.A = Mat::Identity(2, 2);
    sys.B = Mat::Zero(2, 1);
    sys.Fx = Mat::Identity(2, 2);
    sys.Fu = Mat::Zero(1, 2);
    sys.f = Vec::Zero(2);
    Trajectory traj;
    traj.states = {Vec::Zero(2), Vec::Zero(2)};
    traj.inputs = {Vec::Zero(1)};
    traj.disturbances = {Vec::Zero(2)};
    REQUIRE(eval_constraint_max(sys, traj, {0}) == 0.0);

    // x1 <= 20 and x2 >= -3.2 at the state (25, 0).
    LinearSystem num;
    num.A = Mat::Identity(2, 2);
    num.B = Mat::Zero(2, 1);
    num.Fx = (Mat(2, 2) << 1, 0, 0, -1).finished();
    num.Fu = Mat::Zero(1, 2);
    num.f = vec({-20, -3.2});
    Trajectory t2;
    t2.states = {vec({25, 0}), vec({25, 0})};
    t2.inputs = {Vec::Zero(1)};
    t2.disturbances = {Vec::Zero(2)};
    REQUIRE(eval_constraint_max(num, t2, {0}) == Catch::Approx(5.0).margin(1e-12));

    // Constant rows: max of -1 and -2.
    LinearSystem cst;
    cst.A = Mat::Identity(1, 1);
    cst.B = Mat::Zero(1, 1);
    cst.Fx = Mat::Zero(1, 2);
    cst.Fu = Mat::Zero(1, 2);
    cst.f = vec({-1, -2});
    Trajectory t3;
    t3.states = {Vec::Zero(1), Vec::Zero(1)};
    t3.inputs = {Vec::Zero(1)};
    t3.disturbances = {Vec::Zero(1)};
    REQUIRE(eval_constraint_max(cst, t3, {0}) == -1.0);
}

TEST_CASE("disturbance sampling") {
    RngStream s(9, 2, 0);
    auto degenerate = DisturbanceModel::gaussian(Vec::Zero(3), Mat::Zero(3, 3));
    REQUIRE(sample_disturbance(degenerate, 4, s).isZero());

    auto trunc = DisturbanceModel::truncated_gaussian(vec({5}), vec({3}), vec({1}), vec({10}));
    RngStream s2(9, 3, 0);
    for (int i = 0; i < 200; ++i) {
        Vec w = sample_disturbance(trunc, 5, s2);
        REQUIRE(w.minCoeff() >= 1.0);
        REQUIRE(w.maxCoeff() <= 10.0);
    }

    auto emp = DisturbanceModel::empirical({vec({1.5, -2})});
    RngStream s3(9, 4, 0);
    for (int i = 0; i < 20; ++i) REQUIRE(sample_step(emp, s3).isApprox(vec({1.5, -2})));

    REQUIRE_THROWS_AS(
        DisturbanceModel::truncated_gaussian(vec({0}), vec({1}), vec({2}), vec({2})), Error);

    // Mis-specified window: rejection must hit the attempt cap.
    auto bad = DisturbanceModel::truncated_gaussian(vec({0}), vec({1e-8}), vec({10}), vec({10.1}));
    RngStream s4(9, 5, 0);
    REQUIRE_THROWS_AS(sample_step(bad, s4), Error);
}

TEST_CASE("truncated sampler mean matches the analytic truncated-normal mean") {
    const double mu = 5.0, sd = 3.0, a = 1.0, b = 10.0;
    auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); };
    auto Phi = [](double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); };
    const double alpha = (a - mu) / sd, beta = (b - mu) / sd;
    const double Z = Phi(beta) - Phi(alpha);
    const double analytic_mean = mu + sd * (phi(alpha) - phi(beta)) / Z;

    auto model = DisturbanceModel::truncated_gaussian(vec({mu}), vec({sd}), vec({a}), vec({b}));
    RngStream s(2024, 6, 0);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double v = sample_step(model, s)[0];
        sum += v;
        sumsq += v * v;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    double se = std::sqrt(var / n);
    REQUIRE(std::abs(mean - analytic_mean) <= 5.0 * se);
}

TEST_CASE("metric matrix and anisotropic norm") {
    auto I2 = MetricMatrix::identity(2);
    REQUIRE(aniso_norm(I2, vec({3, 4})) == Catch::Approx(5.0));

    MetricMatrix diag21((Mat(2, 2) << 2, 0, 0, 1).finished(), 0.5, 10);
    REQUIRE(aniso_norm(diag21, vec({1, 0})) == Catch::Approx(2.0));

    RngStream rng(5, 8, 0);
    for (int rep = 0; rep < 20; ++rep) {
        Mat L = random_spd(3, rng);
        MetricMatrix m(L, 1e-3, 1e3);
        Vec z(3);
        for (int i = 0; i < 3; ++i) z[i] = rng.normal();
        double direct = aniso_norm(m, z);
        double quad = std::sqrt(z.dot(L.transpose() * L * z));
        REQUIRE(std::abs(direct - quad) <= 1e-12 * (1 + quad));
        REQUIRE((aniso_norm(m, z) == 0.0) == z.isZero());
    }

    REQUIRE_THROWS_AS(MetricMatrix((Mat(2, 2) << 1, 1, 0, 1).finished(), 0.1, 10), Error);
    REQUIRE_THROWS_AS(MetricMatrix(Mat::Identity(2, 2), 2.0, 10.0), Error);
}

TEST_CASE("radius: sigma_max times eps") {
    REQUIRE(radius(MetricMatrix::identity(2), 0.3) == Catch::Approx(0.3));
    MetricMatrix d31((Mat(2, 2) << 3, 0, 0, 1).finished(), 0.5, 10);
    REQUIRE(radius(d31, 0.5) == Catch::Approx(1.5));

    // Power-iteration oracle for sigma_max on random symmetric PD matrices.
    RngStream rng(17, 9, 0);
    for (int rep = 0; rep < 10; ++rep) {
        Mat L = random_spd(4, rng, 0.2, 5.0);
        MetricMatrix m(L, 1e-3, 1e3);
        Vec v = Vec::Ones(4).normalized();
        double lam = 0.0;
        for (int it = 0; it < 500; ++it) {
            Vec w = L * v;
            lam = w.norm();
            v = w / lam;
        }
        REQUIRE(radius(m, 0.7) == Catch::Approx(0.7 * lam).epsilon(1e-8));
    }
}

TEST_CASE("project_metric") {
    Mat inside = (Mat(2, 2) << 1.0, 0.2, 0.2, 2.0).finished();
    MetricMatrix p = project_metric(inside, 0.01, 100);
    REQUIRE((p.lambda() - inside).cwiseAbs().maxCoeff() <= 1e-12);

    Mat clamp = (Mat(2, 2) << 0.005, 0, 0, 50).finished();
    MetricMatrix pc = project_metric(clamp, 0.01, 100);
    REQUIRE(pc.lambda()(0, 0) == Catch::Approx(0.01));
    REQUIRE(pc.lambda()(1, 1) == Catch::Approx(50.0));

    // Nonsymmetric input projects like its symmetric part.
    Mat nonsym = (Mat(2, 2) << 1, 1, 0, 1).finished();
    Mat sym = (Mat(2, 2) << 1, 0.5, 0.5, 1).finished();
    MetricMatrix a = project_metric(nonsym, 0.9, 1.1);
    MetricMatrix b = project_metric(sym, 0.9, 1.1);
    REQUIRE(a.lambda().isApprox(b.lambda(), 1e-12));

    // Grid-search oracle: no symmetric matrix in the eigenvalue box is
    // Frobenius-closer to the symmetric part than the projection.
    Mat target = sym;
    double best = (a.lambda() - target).norm();
    for (double d1 = 0.85; d1 <= 1.15; d1 += 0.01) {
        for (double d2 = 0.85; d2 <= 1.15; d2 += 0.01) {
            for (double off = -0.3; off <= 0.3; off += 0.01) {
                Mat cand = (Mat(2, 2) << d1, off, off, d2).finished();
                Eigen::SelfAdjointEigenSolver<Mat> es(cand);
                if (es.eigenvalues().minCoeff() < 0.9 - 1e-12 ||
                    es.eigenvalues().maxCoeff() > 1.1 + 1e-12)
                    continue;
                REQUIRE((cand - target).norm() >= best - 1e-9);
            }
        }
    }
}
