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

#include <fstream>
#include <set>

#include "anisodrc/learner.hpp"

namespace anisodrc {

inline constexpr const char* kVersion = "anisodrc 0.1.0";

enum class Arm { Wdrc, Pointwise, Regionwise };

inline const char* to_string(Arm a) {
    switch (a) {
        case Arm::Wdrc: return "wdrc";
        case Arm::Pointwise: return "pointwise";
        case Arm::Regionwise: return "regionwise";
    }
    return "?";
}

inline Arm arm_from_string(const std::string& s) {
    if (s == "wdrc") return Arm::Wdrc;
    if (s == "pointwise") return Arm::Pointwise;
    if (s == "regionwise") return Arm::Regionwise;
    throw ConfigError("unknown arm: " + s);
}

struct EvalConfig {
    int n_cost_scenarios = 100;
    int n_violation_rollouts = 500;
    int rollout_length = 10;
    std::vector<double> fixed_x0;  // empty: scenario default
    int boxplot_states = 5;
    int boxplot_realizations = 100;

    void validate() const {
        require(n_cost_scenarios >= 1 && n_violation_rollouts >= 1 && rollout_length >= 1,
                "eval: counts must be >= 1");
        require(boxplot_states >= 1 && boxplot_realizations >= 1,
                "eval: boxplot counts must be >= 1");
    }
};

struct ScenarioConfig {
    std::string scenario = "numerical";  // numerical | inventory | custom
    Arm arm = Arm::Wdrc;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    EvalConfig eval;
    LearnerConfig learner;

    // Inner-problem knobs.
    double eps = 0.1;
    double eta = 0.1;
    int horizon = 5;
    int n_samples = 10;
    double i_bound = 10.0;  // inventory CVaR bound
    /// Training rollout disturbances: resampled from the ambiguity samples
    /// ("empirical") or drawn from the true model ("true").
    std::string train_disturbances = "empirical";
    int train_rollout_length = -1;  // -1: same as eval

    nlohmann::json custom;  // custom scenario definition
    nlohmann::json echo;    // resolved configuration echo

    void validate() const {
        require(scenario == "numerical" || scenario == "inventory" || scenario == "custom",
                "config: scenario must be numerical, inventory or custom");
        eval.validate();
        learner.validate();
        require(eps >= 0.0, "config: eps must be >= 0");
        require(eta > 0.0 && eta < 1.0, "config: eta must lie in (0,1)");
        require(horizon >= 1 && n_samples >= 1, "config: horizon/samples must be >= 1");
        require(train_disturbances == "empirical" || train_disturbances == "true",
                "config: train_disturbances must be 'empirical' or 'true'");
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& path,
                       const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("config: expected an object at " + path);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key '" + path + it.key() + "'");
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

/// Strict configuration reader: unknown keys are errors naming the key path.
inline ScenarioConfig config_from_json(const nlohmann::json& j) {
    ScenarioConfig cfg;
    detail::check_keys(j, "", {"scenario", "arm", "seed", "out_dir", "eval", "learner", "solver",
                               "eps", "eta", "horizon", "n_samples", "i_bound",
                               "train_disturbances", "train_rollout_length", "custom"});
    detail::maybe(j, "scenario", cfg.scenario);
    if (j.contains("arm")) cfg.arm = arm_from_string(j.at("arm").get<std::string>());
    detail::maybe(j, "seed", cfg.seed);
    detail::maybe(j, "out_dir", cfg.out_dir);
    detail::maybe(j, "eps", cfg.eps);
    detail::maybe(j, "eta", cfg.eta);
    detail::maybe(j, "horizon", cfg.horizon);
    detail::maybe(j, "n_samples", cfg.n_samples);
    detail::maybe(j, "i_bound", cfg.i_bound);
    detail::maybe(j, "train_disturbances", cfg.train_disturbances);
    detail::maybe(j, "train_rollout_length", cfg.train_rollout_length);
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        detail::check_keys(e, "eval.",
                           {"n_cost_scenarios", "n_violation_rollouts", "rollout_length",
                            "fixed_x0", "boxplot_states", "boxplot_realizations"});
        detail::maybe(e, "n_cost_scenarios", cfg.eval.n_cost_scenarios);
        detail::maybe(e, "n_violation_rollouts", cfg.eval.n_violation_rollouts);
        detail::maybe(e, "rollout_length", cfg.eval.rollout_length);
        detail::maybe(e, "fixed_x0", cfg.eval.fixed_x0);
        detail::maybe(e, "boxplot_states", cfg.eval.boxplot_states);
        detail::maybe(e, "boxplot_realizations", cfg.eval.boxplot_realizations);
    }
    if (j.contains("learner")) {
        const auto& l = j.at("learner");
        detail::check_keys(l, "learner.",
                           {"k_max", "t_max", "batch", "delta0", "step_offset", "step_exponent",
                            "tau", "sigma", "eps_feas", "mu_min", "mu_max", "alpha_lo", "alpha_hi",
                            "kappa_max", "eig_lo", "eig_hi", "nu0", "mu0", "alpha0", "kappa0",
                            "eval_batch_factor", "global_step_index"});
        detail::maybe(l, "k_max", cfg.learner.k_max);
        detail::maybe(l, "t_max", cfg.learner.t_max);
        detail::maybe(l, "batch", cfg.learner.batch_D);
        detail::maybe(l, "delta0", cfg.learner.step.delta0);
        detail::maybe(l, "step_offset", cfg.learner.step.offset);
        detail::maybe(l, "step_exponent", cfg.learner.step.exponent);
        detail::maybe(l, "tau", cfg.learner.tau);
        detail::maybe(l, "sigma", cfg.learner.sigma);
        detail::maybe(l, "eps_feas", cfg.learner.eps_feas);
        detail::maybe(l, "mu_min", cfg.learner.mu_min);
        detail::maybe(l, "mu_max", cfg.learner.mu_max);
        detail::maybe(l, "alpha_lo", cfg.learner.alpha_lo);
        detail::maybe(l, "alpha_hi", cfg.learner.alpha_hi);
        detail::maybe(l, "kappa_max", cfg.learner.kappa_max);
        detail::maybe(l, "eig_lo", cfg.learner.eig_lo);
        detail::maybe(l, "eig_hi", cfg.learner.eig_hi);
        detail::maybe(l, "nu0", cfg.learner.nu0);
        detail::maybe(l, "mu0", cfg.learner.mu0);
        detail::maybe(l, "alpha0", cfg.learner.alpha0);
        detail::maybe(l, "kappa0", cfg.learner.kappa0);
        detail::maybe(l, "eval_batch_factor", cfg.learner.eval_batch_factor);
        detail::maybe(l, "global_step_index", cfg.learner.global_step_index);
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::check_keys(s, "solver.", {"tol", "max_iters"});
        detail::maybe(s, "tol", cfg.learner.solve.tol);
        detail::maybe(s, "max_iters", cfg.learner.solve.max_iters);
    }
    if (j.contains("custom")) cfg.custom = j.at("custom");
    cfg.learner.seed = cfg.seed;
    cfg.echo = j;
    cfg.validate();
    return cfg;
}

inline ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

/// Everything run_experiment needs about one scenario, at one rollout length.
struct ScenarioAssets {
    DrcSpec spec;                // inner problem with ambiguity samples
    PwaCost outer_cost;          // evaluation-length cost
    PwaCost train_outer_cost;    // training-length cost
    DisturbanceModel true_model;
    DisturbanceModel train_model;
    Vec x0_lo, x0_hi;            // region for regionwise sampling
    Vec fixed_x0;
    int L = 10;
    int L_train = 10;
    std::vector<std::string> non_paper_defaults;
};

namespace detail {

/// The linear-system study: pieces are +/- one accumulating linear form.
inline PwaCost mirrored_cost(int nx, int nu, int L, const Vec& a_step, double b_x0,
                             double b_u) {
    PwaCost cost;
    PwaCost::Piece p;
    p.a = Vec::Zero(nx * L);
    for (int t = 0; t < L; ++t) p.a.segment(t * nx, nx) = a_step;
    p.b = Vec::Zero(nx + nu * L);
    p.b.head(nx).setConstant(b_x0);
    p.b.tail(nu * L).setConstant(b_u);
    p.c = 0.0;
    cost.pieces.push_back(p);
    PwaCost::Piece n;
    n.a = -p.a;
    n.b = -p.b;
    n.c = 0.0;
    cost.pieces.push_back(n);
    return cost;
}

/// Inventory stage costs expanded to one affine piece per sign pattern of
/// the holding/backlog hinges: 2^L pieces.
inline PwaCost inventory_cost(int L, double c1, double c2, double cH, double cB) {
    require(L <= 16, "inventory cost expansion limited to 2^16 pieces");
    PwaCost cost;
    const int nu = 2;
    for (long mask = 0; mask < (1L << L); ++mask) {
        PwaCost::Piece p;
        p.a = Vec::Zero(L);
        for (int t = 0; t < L; ++t) p.a[t] = (mask >> t) & 1 ? cH : -cB;
        p.b = Vec::Zero(1 + nu * L);
        for (int t = 0; t < L; ++t) {
            p.b[1 + t * nu] = c1;      // standard order placed at t
            p.b[1 + t * nu + 1] = c2;  // express order arriving at t+1
        }
        p.c = 0.0;
        cost.pieces.push_back(p);
    }
    return cost;
}

inline Mat draw_samples(const DisturbanceModel& model, int N, int T, std::uint64_t seed) {
    Mat rows(N, model.dim() * T);
    for (int i = 0; i < N; ++i) {
        RngStream stream(seed, purpose::kAmbiguitySamples, static_cast<std::uint64_t>(i));
        rows.row(i) = sample_disturbance(model, T, stream).transpose();
    }
    return rows;
}

inline DisturbanceModel empirical_from_rows(const Mat& rows, int dim) {
    std::vector<Vec> atoms;
    const int T = static_cast<int>(rows.cols()) / dim;
    for (int i = 0; i < rows.rows(); ++i)
        for (int t = 0; t < T; ++t) atoms.push_back(rows.block(i, t * dim, 1, dim).transpose());
    return DisturbanceModel::empirical(std::move(atoms));
}

}  // namespace detail

inline ScenarioAssets build_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioAssets as;
    as.L = cfg.eval.rollout_length;
    as.L_train = cfg.train_rollout_length > 0 ? cfg.train_rollout_length : as.L;
    const int T = cfg.horizon;

    if (cfg.scenario == "numerical") {
        LinearSystem sys;
        sys.A = (Mat(2, 2) << 0.95, -0.02, 0.0, 0.2).finished();
        sys.B = (Mat(2, 1) << 0.5, -0.01).finished();
        sys.Fx = (Mat(2, 2) << 1, 0, 0, -1).finished();  // x1 <= 20, x2 >= -3.2
        sys.Fu = Mat::Zero(1, 2);
        sys.f = (Vec(2) << -20.0, -3.2).finished();
        as.true_model = DisturbanceModel::gaussian(Vec::Zero(2), 2.0 * Mat::Identity(2, 2));
        as.spec.sys = sys;
        as.spec.stacked = build_stacked(sys, T);
        as.spec.samples.rows = detail::draw_samples(as.true_model, cfg.n_samples, T, cfg.seed);
        Vec a_step(2);
        a_step << 10.0, 2.0;
        as.spec.cost = detail::mirrored_cost(2, 1, T, a_step, 10.0, 10.0);
        as.outer_cost = detail::mirrored_cost(2, 1, as.L, a_step, 10.0, 10.0);
        as.train_outer_cost = detail::mirrored_cost(2, 1, as.L_train, a_step, 10.0, 10.0);
        as.x0_lo = Vec::Constant(2, 12.0);
        as.x0_hi = Vec::Constant(2, 16.0);
        as.fixed_x0 = Vec::Constant(2, 14.0);
        as.non_paper_defaults = {"eps", "fixed_x0"};
    } else if (cfg.scenario == "inventory") {
        // State: inventory level; inputs: (standard order placed now,
        // express order arriving next step); disturbance w_t = -demand_{t+1}.
        LinearSystem sys;
        sys.A = Mat::Constant(1, 1, 1.0);
        sys.B = (Mat(1, 2) << 1.0, 1.0).finished();
        sys.Fx = Mat::Constant(1, 1, 1.0);  // CVaR(I_t) <= I_bound
        sys.Fu = Mat::Zero(2, 1);
        sys.f = Vec::Constant(1, -cfg.i_bound);
        as.true_model = DisturbanceModel::truncated_gaussian(
            Vec::Constant(1, -5.0), Vec::Constant(1, 3.0), Vec::Constant(1, -10.0),
            Vec::Constant(1, -1.0));
        as.spec.sys = sys;
        as.spec.stacked = build_stacked(sys, T);
        as.spec.samples.rows = detail::draw_samples(as.true_model, cfg.n_samples, T, cfg.seed);
        as.spec.cost = detail::inventory_cost(T, 10.0, 50.0, 80.0, 5.0);
        as.outer_cost = detail::inventory_cost(as.L, 10.0, 50.0, 80.0, 5.0);
        as.train_outer_cost = detail::inventory_cost(as.L_train, 10.0, 50.0, 80.0, 5.0);
        as.spec.robust_nonneg_inputs = true;  // x_t, y_t >= 0 for all demands
        as.spec.w_lo = Vec::Constant(T, -10.0);
        as.spec.w_hi = Vec::Constant(T, -1.0);
        as.x0_lo = Vec::Constant(1, 1.0);
        as.x0_hi = Vec::Constant(1, 5.0);
        as.fixed_x0 = Vec::Constant(1, 3.0);
        as.non_paper_defaults = {"eps", "eta", "i_bound", "n_samples", "fixed_x0",
                                 "evaluation counts"};
    } else {
        // Custom scenario: everything spelled out in the config.
        const auto& c = cfg.custom;
        detail::check_keys(c, "custom.",
                           {"A", "B", "Fx", "Fu", "f", "cost_pieces", "outer_cost_pieces",
                            "disturbance", "x0_lo", "x0_hi", "fixed_x0"});
        auto mat_of_json = [&](const nlohmann::json& v, const std::string& what) {
            auto rows = v.get<std::vector<std::vector<double>>>();
            require(!rows.empty(), what + " must be nonempty");
            Mat m(rows.size(), rows[0].size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                require(rows[i].size() == rows[0].size(), what + " rows must have equal length");
                for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
            }
            return m;
        };
        auto mat_of = [&](const char* key) { return mat_of_json(c.at(key), std::string("custom.") + key); };
        auto vec_of = [&](const nlohmann::json& v) {
            auto arr = v.get<std::vector<double>>();
            return Eigen::Map<Vec>(arr.data(), static_cast<Eigen::Index>(arr.size())).eval();
        };
        LinearSystem sys;
        sys.A = mat_of("A");
        sys.B = mat_of("B");
        sys.Fx = mat_of("Fx");
        sys.Fu = mat_of("Fu");
        sys.f = vec_of(c.at("f"));
        as.spec.sys = sys;
        as.spec.stacked = build_stacked(sys, T);
        const auto& dj = c.at("disturbance");
        detail::check_keys(dj, "custom.disturbance.",
                           {"kind", "mean", "covariance", "stdev", "lower", "upper"});
        std::string kind = dj.at("kind").get<std::string>();
        if (kind == "gaussian")
            as.true_model = DisturbanceModel::gaussian(
                vec_of(dj.at("mean")), mat_of_json(dj.at("covariance"), "custom.disturbance.covariance"));
        else if (kind == "truncated_gaussian")
            as.true_model = DisturbanceModel::truncated_gaussian(
                vec_of(dj.at("mean")), vec_of(dj.at("stdev")), vec_of(dj.at("lower")),
                vec_of(dj.at("upper")));
        else
            throw ConfigError("custom.disturbance.kind must be gaussian or truncated_gaussian");
        as.spec.samples.rows = detail::draw_samples(as.true_model, cfg.n_samples, T, cfg.seed);
        auto pieces_of = [&](const char* key, int length) {
            PwaCost cost;
            for (const auto& pj : c.at(key)) {
                detail::check_keys(pj, std::string("custom.") + key + ".", {"a", "b", "c"});
                PwaCost::Piece p;
                p.a = vec_of(pj.at("a"));
                p.b = vec_of(pj.at("b"));
                p.c = pj.value("c", 0.0);
                cost.pieces.push_back(p);
            }
            require_dim(static_cast<int>(cost.pieces[0].a.size()) == sys.nx() * length,
                        std::string("custom.") + key + ": piece length mismatch");
            return cost;
        };
        as.spec.cost = pieces_of("cost_pieces", T);
        as.outer_cost = pieces_of("outer_cost_pieces", as.L);
        require(as.L_train == as.L,
                "custom scenario requires train_rollout_length == rollout_length");
        as.train_outer_cost = as.outer_cost;
        as.x0_lo = vec_of(c.at("x0_lo"));
        as.x0_hi = vec_of(c.at("x0_hi"));
        as.fixed_x0 = c.contains("fixed_x0") ? vec_of(c.at("fixed_x0"))
                                             : Vec(0.5 * (as.x0_lo + as.x0_hi));
    }

    as.spec.eta = cfg.eta;
    as.spec.eps = cfg.eps;
    if (!cfg.eval.fixed_x0.empty()) {
        require_dim(static_cast<int>(cfg.eval.fixed_x0.size()) == as.spec.nx(),
                    "eval.fixed_x0 dimension");
        as.fixed_x0 = Eigen::Map<const Vec>(cfg.eval.fixed_x0.data(),
                                            static_cast<Eigen::Index>(cfg.eval.fixed_x0.size()));
    }
    as.train_model = cfg.train_disturbances == "empirical"
                         ? detail::empirical_from_rows(as.spec.samples.rows, as.spec.nx())
                         : as.true_model;
    as.spec.validate();
    return as;
}

struct EvaluationReport {
    std::string arm;
    std::uint64_t seed = 0;
    std::vector<Vec> x0s;
    std::vector<double> costs;
    std::vector<bool> violated_flags;
    double average_cost = 0.0;
    double violation_rate = 0.0;
    bool trained = false;
    bool train_converged = false;
    Mat learned_lambda;
    std::vector<HistoryRow> history;
    std::vector<Vec> boxplot_states;
    Mat boxplot_costs;  // states x realizations
};

namespace detail {

inline Vec uniform_box(const Vec& lo, const Vec& hi, RngStream& s) {
    Vec out(lo.size());
    for (int i = 0; i < lo.size(); ++i) out[i] = s.uniform(lo[i], hi[i]);
    return out;
}

/// Closed-loop rollout under the receding-horizon DRC controller; the warm
/// start is carried along the rollout.
inline Trajectory drc_rollout(const DrcSpec& spec, const MetricMatrix& m, const Vec& x0,
                              const Vec& w_seq, const SolveSettings& settings) {
    Vec warm;
    auto controller = [&](const Vec& x, int) {
        auto res = solve_drc(spec, x, m, settings, warm.size() ? &warm : nullptr);
        warm = res.sol.z;
        return res.u0;
    };
    return rollout(spec.sys, controller, x0, w_seq);
}

}  // namespace detail

/// Runs one arm of one scenario end to end: optional training, then the
/// average-cost evaluation, the fixed-state violation estimate and the
/// box-plot sweep. All draws derive from (seed, purpose, index) substreams,
/// so identical configurations reproduce identical numbers.
inline EvaluationReport run_experiment(const ScenarioConfig& cfg) {
    ScenarioAssets as = build_scenario(cfg);
    const int nx = as.spec.nx();
    const int d = as.spec.wdim();

    EvaluationReport report;
    report.arm = to_string(cfg.arm);
    report.seed = cfg.seed;

    MetricMatrix metric = MetricMatrix::identity(d, cfg.learner.eig_lo, cfg.learner.eig_hi);
    if (cfg.arm != Arm::Wdrc) {
        const bool pointwise = cfg.arm == Arm::Pointwise;
        ScenarioSampler sampler = [&](std::uint64_t counter) {
            RngStream stream(cfg.seed, purpose::kTrainScenario, counter);
            Scenario sc;
            sc.x0 = pointwise ? as.fixed_x0 : detail::uniform_box(as.x0_lo, as.x0_hi, stream);
            sc.w_seq = sample_disturbance(as.train_model, as.L_train, stream);
            return sc;
        };
        TrainResult tr =
            train(as.spec, as.train_outer_cost, cfg.learner, sampler, Mat::Identity(d, d));
        metric = tr.lambda;
        report.history = std::move(tr.history);
        report.trained = true;
        report.train_converged = tr.converged;
    }
    report.learned_lambda = metric.lambda();

    const SolveSettings& st = cfg.learner.solve;

    // Average closed-loop cost over fresh (x0, w) scenarios.
    const int n_cost = cfg.eval.n_cost_scenarios;
    report.x0s.resize(n_cost);
    report.costs.resize(n_cost);
    report.violated_flags.resize(n_cost);
    parallel_for(n_cost, [&](std::size_t i) {
        RngStream stream(cfg.seed, purpose::kEvalScenario, i);
        Vec x0 = detail::uniform_box(as.x0_lo, as.x0_hi, stream);
        Vec w = sample_disturbance(as.true_model, as.L, stream);
        Trajectory traj = detail::drc_rollout(as.spec, metric, x0, w, st);
        report.x0s[i] = x0;
        report.costs[i] = eval_pwa_cost(as.outer_cost, traj).first;
        report.violated_flags[i] = eval_constraint_max(as.spec.sys, traj, all_steps(as.L)) > 0.0;
    });
    report.average_cost = 0.0;
    for (double c : report.costs) report.average_cost += c;
    report.average_cost /= n_cost;

    // Violation rate: fresh rollouts from the fixed evaluation state.
    const int n_vio = cfg.eval.n_violation_rollouts;
    std::vector<char> vio(n_vio);
    parallel_for(n_vio, [&](std::size_t i) {
        RngStream stream(cfg.seed, purpose::kViolationRollout, i);
        Vec w = sample_disturbance(as.true_model, as.L, stream);
        Trajectory traj = detail::drc_rollout(as.spec, metric, as.fixed_x0, w, st);
        vio[i] = eval_constraint_max(as.spec.sys, traj, all_steps(as.L)) > 0.0 ? 1 : 0;
    });
    int violations = 0;
    for (char v : vio) violations += v;
    report.violation_rate = static_cast<double>(violations) / n_vio;

    // Box-plot data: a handful of random initial states, many realizations.
    const int S = cfg.eval.boxplot_states, R = cfg.eval.boxplot_realizations;
    report.boxplot_states.resize(S);
    report.boxplot_costs.resize(S, R);
    for (int s = 0; s < S; ++s) {
        RngStream stream(cfg.seed, purpose::kBoxplotScenario, static_cast<std::uint64_t>(s));
        report.boxplot_states[s] = detail::uniform_box(as.x0_lo, as.x0_hi, stream);
    }
    parallel_for(static_cast<std::size_t>(S) * R, [&](std::size_t idx) {
        const int s = static_cast<int>(idx) / R;
        const int r = static_cast<int>(idx) % R;
        RngStream stream(cfg.seed, purpose::kBoxplotRealization, idx);
        Vec w = sample_disturbance(as.true_model, as.L, stream);
        Trajectory traj = detail::drc_rollout(as.spec, metric, report.boxplot_states[s], w, st);
        report.boxplot_costs(s, r) = eval_pwa_cost(as.outer_cost, traj).first;
        (void)r;
    });
    return report;
}

}  // namespace anisodrc
