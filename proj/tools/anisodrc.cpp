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
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "anisodrc/report.hpp"
#include "anisodrc/wasserstein.hpp"

using namespace anisodrc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

void print_report(const EvaluationReport& r) {
    std::printf("arm=%s seed=%llu average_cost=%s violation_rate=%s%s\n", r.arm.c_str(),
                static_cast<unsigned long long>(r.seed), format_double(r.average_cost).c_str(),
                format_double(r.violation_rate).c_str(),
                r.trained ? (r.train_converged ? " (trained, feasible)" : " (trained)") : "");
}

int run_arms(ScenarioConfig base, const std::vector<std::string>& arms) {
    std::vector<EvaluationReport> reports;
    std::vector<ScenarioConfig> cfgs;
    for (const auto& arm : arms) {
        ScenarioConfig cfg = base;
        cfg.arm = arm_from_string(arm);
        if (cfg.echo.is_null()) cfg.echo = nlohmann::json::object();
        cfg.echo["scenario"] = cfg.scenario;
        cfg.echo["arm"] = arm;
        cfg.echo["seed"] = cfg.seed;
        std::fprintf(stderr, "[anisodrc] running %s / %s ...\n", cfg.scenario.c_str(),
                     arm.c_str());
        reports.push_back(run_experiment(cfg));
        cfgs.push_back(cfg);
        print_report(reports.back());
    }
    emit_report(reports, cfgs, base.out_dir);
    std::fprintf(stderr, "[anisodrc] wrote reports under %s\n", base.out_dir.c_str());
    return kExitOk;
}

/// Compact built-in checks of the core properties; one line per suite.
int selftest() {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::printf("%-38s %s\n", name, ok ? "PASS" : "FAIL");
        if (!ok) ++failures;
    };

    {
        RngStream rng(7, 1, 0);
        bool ok = true;
        for (int rep = 0; rep < 200; ++rep) {
            Vec u(4), v(4);
            for (int i = 0; i < 4; ++i) {
                u[i] = rng.normal();
                v[i] = rng.normal();
            }
            for (auto c : {Cone::nonneg(4), Cone::soc(4)}) {
                Vec pu = project_cone(c, u), pv = project_cone(c, v);
                ok &= (project_cone(c, pu) - pu).norm() <= 1e-12 * (1 + pu.norm());
                ok &= (pu - pv).norm() <= (u - v).norm() + 1e-12;
            }
        }
        check("cone projections", ok);
    }
    {
        ConicProblem p;
        p.r = Vec::Constant(1, 1.0);
        Mat G(1, 1);
        G << -1.0;
        p.G = G.sparseView();
        p.h = Vec::Constant(1, -1.0);
        p.cones = {Cone::nonneg(1)};
        auto sol = solve(p);
        bool ok = sol.status == SolveStatus::Optimal && std::abs(sol.x[0] - 1.0) < 1e-7;

        ConicProblem q;
        q.r = Vec::Constant(1, 1.0);
        Mat G2(3, 1);
        G2 << -1, 0, 0;
        q.G = G2.sparseView();
        q.h = (Vec(3) << 0, 1, 1).finished();
        q.cones = {Cone::soc(3)};
        auto sol2 = solve(q);
        ok &= sol2.status == SolveStatus::Optimal &&
              std::abs(sol2.x[0] - std::sqrt(2.0)) < 1e-7;
        check("conic solver", ok);
    }
    {
        RngStream rng(11, 2, 0);
        bool ok = true;
        for (int rep = 0; rep < 10; ++rep) {
            std::vector<Vec> pa, qa;
            for (int i = 0; i < 3; ++i) {
                pa.push_back(Vec::NullaryExpr(2, [&](Eigen::Index) { return rng.normal(); }));
                qa.push_back(Vec::NullaryExpr(2, [&](Eigen::Index) { return rng.normal(); }));
            }
            auto P = DiscreteDistribution::uniform(pa);
            auto Q = DiscreteDistribution::uniform(qa);
            Mat lam = (Mat(2, 2) << 2, 0.3, 0.3, 1).finished();
            MetricMatrix m(lam, 1e-3, 1e3);
            double a = discrete_wasserstein(P, Q, m, 1.0);
            DiscreteDistribution Pp = P, Qp = Q;
            for (auto& x : Pp.atoms) x = lam * x;
            for (auto& x : Qp.atoms) x = lam * x;
            double b = discrete_wasserstein(Pp, Qp, MetricMatrix::identity(2), 1.0);
            ok &= std::abs(a - b) <= 1e-6;
            ok &= a <= m.sigma_max() * discrete_wasserstein(P, Q, MetricMatrix::identity(2), 1.0) +
                      1e-8;
        }
        check("transport pushforward identity", ok);
    }
    {
        RngStream rng(13, 3, 0);
        Vec xhat(3);
        for (int i = 0; i < 3; ++i) xhat[i] = rng.normal();
        Mat G(9, 3);
        Vec h(9);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) G(i, j) = rng.normal();
            h[i] = G.row(i).dot(xhat) + rng.uniform(0.2, 1.0);
        }
        for (int i = 0; i < 3; ++i) {
            G.row(3 + 2 * i).setZero();
            G(3 + 2 * i, i) = 1.0;
            h[3 + 2 * i] = 20.0;
            G.row(3 + 2 * i + 1).setZero();
            G(3 + 2 * i + 1, i) = -1.0;
            h[3 + 2 * i + 1] = 20.0;
        }
        ConicProblem p;
        p.r = Vec::NullaryExpr(3, [&](Eigen::Index) { return rng.normal(); });
        p.G = G.sparseView();
        p.h = h;
        p.cones = {Cone::nonneg(9)};
        auto sol = solve(p);
        bool ok = sol.status == SolveStatus::Optimal;
        if (ok) {
            SolutionDerivative deriv(p, sol, DegeneracyPolicy::MinNorm);
            for (int rep = 0; rep < 5 && ok; ++rep) {
                Vec gx = Vec::NullaryExpr(3, [&](Eigen::Index) { return rng.normal(); });
                DataPerturbation d = DataPerturbation::zero(p);
                Mat dG(9, 3);
                for (int i = 0; i < 9; ++i)
                    for (int j = 0; j < 3; ++j) dG(i, j) = rng.normal();
                d.dG = dG.sparseView();
                for (int i = 0; i < 9; ++i) d.dh[i] = rng.normal();
                for (int j = 0; j < 3; ++j) d.dr[j] = rng.normal();
                double lhs = gx.dot(deriv.forward(d).dx);
                double rhs = pair(deriv.adjoint(gx), d);
                ok &= std::abs(lhs - rhs) <= 1e-9 * (1 + std::abs(lhs));
            }
        }
        check("derivative pairing identity", ok);
    }
    {
        RngStream rng(17, 4, 0);
        LinearSystem sys;
        sys.A = (Mat(2, 2) << 0.9, 0.1, 0.0, 0.8).finished();
        sys.B = (Mat(2, 1) << 1.0, 0.5).finished();
        sys.Fx = Mat::Identity(2, 2);
        sys.Fu = Mat::Zero(1, 2);
        sys.f = Vec::Constant(2, -100.0);
        auto sd = build_stacked(sys, 3);
        bool ok = true;
        for (int rep = 0; rep < 50; ++rep) {
            Vec x0(2), u(3), w(6);
            for (int i = 0; i < 2; ++i) x0[i] = rng.normal();
            for (int i = 0; i < 3; ++i) u[i] = rng.normal();
            for (int i = 0; i < 6; ++i) w[i] = rng.normal();
            Vec x = x0, y(6);
            for (int t = 0; t < 3; ++t) {
                x = sys.A * x + sys.B * u.segment(t, 1) + w.segment(2 * t, 2);
                y.segment(2 * t, 2) = x;
            }
            Vec z(5);
            z << x0, u;
            ok &= (y - (sd.L * z + sd.H * w)).norm() <= 1e-10 * (1 + y.norm());
        }
        check("stacked dynamics", ok);
    }
    std::printf("%s\n", failures == 0 ? "selftest: all suites passed"
                                      : "selftest: FAILURES detected");
    return failures == 0 ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anisodrc: distributionally robust control with a learned anisotropic "
                 "Wasserstein ambiguity metric"};
    app.require_subcommand(1);

    std::string config_path, out_override;
    std::uint64_t seed_override = 0;

    auto* run = app.add_subcommand("run", "run one experiment from a config file");
    run->add_option("--config", config_path, "path to the JSON configuration")->required();
    auto* seed_opt = run->add_option("--seed", seed_override, "override the master seed");
    run->add_option("--out", out_override, "override the output directory");

    std::string scenario;
    std::string arms_csv = "wdrc,pointwise,regionwise";
    std::uint64_t rep_seed = 1;
    std::string rep_out;
    auto* rep = app.add_subcommand("reproduce", "reproduce a case study");
    rep->add_option("scenario", scenario, "numerical or inventory")
        ->required()
        ->check(CLI::IsMember({"numerical", "inventory"}));
    rep->add_option("--arms", arms_csv, "comma-separated arms to run");
    rep->add_option("--seed", rep_seed, "master seed");
    rep->add_option("--out", rep_out, "output directory");

    auto* self = app.add_subcommand("selftest", "run the built-in property suites");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) {
            ScenarioConfig cfg = parse_config(config_path);
            if (seed_opt->count() > 0) {
                cfg.seed = seed_override;
                cfg.learner.seed = seed_override;
                cfg.echo["seed"] = seed_override;
            }
            if (!out_override.empty()) cfg.out_dir = out_override;
            return run_arms(cfg, {to_string(cfg.arm)});
        }
        if (rep->parsed()) {
            ScenarioConfig cfg;
            cfg.scenario = scenario;
            cfg.seed = rep_seed;
            cfg.learner.seed = rep_seed;
            cfg.out_dir = rep_out.empty() ? ("out_" + scenario) : rep_out;
            if (scenario == "inventory") {
                // Desk-scale training budget for the heavier inventory solves.
                cfg.train_rollout_length = 5;
                cfg.learner.k_max = 12;
                cfg.learner.t_max = 10;
                cfg.learner.batch_D = 4;
            }
            cfg.echo = nlohmann::json::object();
            std::vector<std::string> arms;
            std::string cur;
            for (char ch : arms_csv + ",") {
                if (ch == ',') {
                    if (!cur.empty()) arms.push_back(cur);
                    cur.clear();
                } else {
                    cur += ch;
                }
            }
            require(!arms.empty(), "reproduce: no arms given");
            return run_arms(cfg, arms);
        }
        if (self->parsed()) return selftest();
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitSolver;
    }
    return kExitOk;
}
