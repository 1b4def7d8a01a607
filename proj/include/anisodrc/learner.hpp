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

#include "anisodrc/drc.hpp"

namespace anisodrc {

/// Empirical CVaR surrogate (1/N) sum [g_i - alpha]_+ / eta + alpha.
inline double cvar_surrogate(const Vec& g_values, double alpha, double eta) {
    require(eta > 0.0 && eta < 1.0, "cvar_surrogate: eta must lie in (0,1)");
    double acc = 0.0;
    for (int i = 0; i < g_values.size(); ++i) acc += std::max(g_values[i] - alpha, 0.0);
    return acc / (g_values.size() * eta) + alpha;
}

/// H = F + mu (G + kappa) + (nu/2)(G + kappa)^2.
inline double augmented_lagrangian(double F, double G, double kappa, double mu, double nu) {
    require(nu > 0.0, "augmented_lagrangian: nu must be positive");
    const double runner = G + kappa;
    return F + mu * runner + 0.5 * nu * runner * runner;
}

/// Diminishing step sizes delta0 (t + offset)^(-exponent) with
/// exponent in (0.5, 1]: square-summable but not summable, o(1/log t).
struct StepSchedule {
    double delta0 = 0.1;
    double offset = 0.0;
    double exponent = 0.75;

    void validate() const {
        require(delta0 > 0.0, "step size: delta0 must be positive");
        require(exponent > 0.5 && exponent <= 1.0, "step size: exponent must lie in (0.5, 1]");
        require(offset >= 0.0, "step size: offset must be >= 0");
    }
    double at(long t) const {
        require(t >= 1, "step size: t must be >= 1");
        return delta0 * std::pow(static_cast<double>(t) + offset, -exponent);
    }
};

struct LearnerConfig {
    int k_max = 40;
    int t_max = 25;
    int batch_D = 8;
    StepSchedule step;
    double tau = 0.5;
    double sigma = 2.0;
    double eps_feas = 1e-3;
    double mu_min = 0.0;
    double mu_max = 1e4;
    double alpha_lo = -1e6;
    double alpha_hi = 1e6;
    double kappa_max = 1e6;
    double eig_lo = 0.01;
    double eig_hi = 100.0;
    double nu0 = 1.0;
    double mu0 = 0.0;
    double alpha0 = 0.0;
    double kappa0 = 0.0;
    int eval_batch_factor = 4;
    /// Step index continues across outer iterations so the whole run uses one
    /// diminishing schedule.
    bool global_step_index = true;
    std::uint64_t seed = 0;
    SolveSettings solve;

    void validate() const {
        require(k_max >= 1 && t_max >= 1 && batch_D >= 1, "LearnerConfig: counts must be >= 1");
        step.validate();
        require(tau > 0.0 && tau < 1.0, "LearnerConfig: tau must lie in (0,1)");
        require(sigma > 1.0, "LearnerConfig: sigma must be > 1");
        require(eps_feas >= 0.0, "LearnerConfig: eps_feas must be >= 0");
        require(mu_min <= mu_max && mu_min >= 0.0, "LearnerConfig: mu box invalid");
        require(alpha_lo < alpha_hi, "LearnerConfig: alpha box invalid");
        require(kappa_max > 0.0, "LearnerConfig: kappa box invalid");
        require(eig_lo > 0.0 && eig_hi >= eig_lo, "LearnerConfig: eigenvalue bounds invalid");
        require(nu0 > 0.0, "LearnerConfig: nu0 must be positive");
    }
};

inline double step_size(const LearnerConfig& cfg, long t) { return cfg.step.at(t); }

struct OuterIterate {
    MetricMatrix lambda;
    double alpha = 0.0;
    double kappa = 0.0;
    double mu = 0.0;
    double nu = 1.0;
    double g_best = std::numeric_limits<double>::infinity();
};

struct BatchGradient {
    Mat gLam;
    double gAlpha = 0.0;
    double gKappa = 0.0;
    double F_value = 0.0;
    double G_value = 0.0;
};

/// One training scenario: an initial state and an L-step disturbance stack.
struct Scenario {
    Vec x0;
    Vec w_seq;
};

using ScenarioSampler = std::function<Scenario(std::uint64_t counter)>;

namespace detail {

/// Forward accumulation state for one rollout: per-coordinate metric
/// Jacobians of states and inputs, J as (coordinate -> d x d matrix).
struct RolloutDerivatives {
    Trajectory traj;
    std::vector<std::vector<Mat>> Jx;  // per step 0..L: n_x matrices
    std::vector<std::vector<Mat>> Ju;  // per step 0..L-1: n_u matrices
    double F = 0.0;                    // outer cost value
    Mat dF_dLam;
    double g = 0.0;                    // max constraint value over the rollout
    Mat dg_dLam;
};

/// Rolls the closed loop under the DRC controller while propagating the
/// metric Jacobians J_{x_{t+1}} = A J_{x_t} + B J_{u_t} with
/// J_{u_t} = (du/dx) J_{x_t} + du/dLam.
inline RolloutDerivatives rollout_with_derivatives(const DrcSpec& spec, const PwaCost& outer_cost,
                                                   const MetricMatrix& m, const Scenario& sc,
                                                   const SolveSettings& settings) {
    const int nx = spec.nx(), nu = spec.nu();
    const int d = spec.wdim();
    const int L = static_cast<int>(sc.w_seq.size()) / nx;

    RolloutDerivatives out;
    out.traj.states.push_back(sc.x0);
    out.Jx.push_back(std::vector<Mat>(nx, Mat::Zero(d, d)));

    Vec warm;
    for (int t = 0; t < L; ++t) {
        const Vec& xt = out.traj.states.back();
        DrcCompilation comp = compile(spec, xt, m);
        ConicSolution sol = solve(comp.problem, settings, warm.size() ? &warm : nullptr);
        if (sol.status != SolveStatus::Optimal)
            throw SolverError(std::string("inner solve failed at rollout step ") +
                              std::to_string(t) + ": " + to_string(sol.status));
        warm = sol.z;
        Policy pol = extract_policy(comp, sol);
        Vec ut = first_control(pol, nu);
        ControllerDerivatives cd = controller_derivatives(comp, sol);

        // J_u = (du/dx) J_x + du/dLam
        std::vector<Mat> Jut(nu, Mat::Zero(d, d));
        for (int c = 0; c < nu; ++c) {
            Jut[c] = cd.du0_dLam[c];
            for (int k = 0; k < nx; ++k) Jut[c] += cd.du0_dx0(c, k) * out.Jx[t][k];
        }
        // J_{x+} = A J_x + B J_u
        std::vector<Mat> Jxn(nx, Mat::Zero(d, d));
        for (int i = 0; i < nx; ++i) {
            for (int k = 0; k < nx; ++k)
                if (spec.sys.A(i, k) != 0.0) Jxn[i] += spec.sys.A(i, k) * out.Jx[t][k];
            for (int k = 0; k < nu; ++k)
                if (spec.sys.B(i, k) != 0.0) Jxn[i] += spec.sys.B(i, k) * Jut[k];
        }

        Vec wt = sc.w_seq.segment(t * nx, nx);
        out.traj.inputs.push_back(ut);
        out.traj.disturbances.push_back(wt);
        out.traj.states.push_back(spec.sys.A * xt + spec.sys.B * ut + wt);
        out.Ju.push_back(std::move(Jut));
        out.Jx.push_back(std::move(Jxn));
    }

    // Outer cost along the active piece.
    auto [Fval, piece] = eval_pwa_cost(outer_cost, out.traj);
    out.F = Fval;
    out.dF_dLam = Mat::Zero(d, d);
    const auto& pc = outer_cost.pieces[piece];
    for (int t = 1; t <= L; ++t)
        for (int i = 0; i < nx; ++i) {
            const double coef = pc.a[(t - 1) * nx + i];
            if (coef != 0.0) out.dF_dLam += coef * out.Jx[t][i];
        }
    for (int t = 0; t < L; ++t)
        for (int c = 0; c < nu; ++c) {
            const double coef = pc.b[nx + t * nu + c];
            if (coef != 0.0) out.dF_dLam += coef * out.Ju[t][c];
        }

    // Constraint maximum over t in {0..L-1} and its subgradient through the
    // lowest-index active (step, row).
    ConstraintArgmax am = eval_constraint_argmax(spec.sys, out.traj, all_steps(L));
    out.g = am.value;
    out.dg_dLam = Mat::Zero(d, d);
    for (int i = 0; i < nx; ++i) {
        const double coef = spec.sys.Fx(i, am.row);
        if (coef != 0.0) out.dg_dLam += coef * out.Jx[am.step][i];
    }
    for (int c = 0; c < nu; ++c) {
        const double coef = spec.sys.Fu(c, am.row);
        if (coef != 0.0) out.dg_dLam += coef * out.Ju[am.step][c];
    }
    return out;
}

}  // namespace detail

/// Mini-batch estimate of the augmented-Lagrangian gradient (Algorithm 2):
/// rolls each scenario under the current metric, accumulates metric Jacobians
/// through the trajectory recursion, and weights the CVaR hinge pieces.
inline BatchGradient batch_gradient(const DrcSpec& spec, const PwaCost& outer_cost,
                                    const OuterIterate& it, const std::vector<Scenario>& batch,
                                    const SolveSettings& settings = {},
                                    const ScenarioSampler* resampler = nullptr,
                                    std::uint64_t resample_base = 0) {
    require(!batch.empty(), "batch_gradient: empty batch");
    const int D = static_cast<int>(batch.size());
    const int d = spec.wdim();

    std::vector<detail::RolloutDerivatives> rds(D);
    parallel_for(D, [&](std::size_t i) {
        try {
            rds[i] = detail::rollout_with_derivatives(spec, outer_cost, it.lambda, batch[i],
                                                      settings);
        } catch (const std::exception& e) {
            if (resampler == nullptr)
                throw SolverError("batch_gradient: scenario " + std::to_string(i) +
                                  " failed: " + e.what());
            // Resample this scenario once; a repeated failure aborts the batch.
            Scenario retry = (*resampler)(resample_base + i);
            try {
                rds[i] = detail::rollout_with_derivatives(spec, outer_cost, it.lambda, retry,
                                                          settings);
            } catch (const std::exception& e2) {
                throw SolverError("batch_gradient: scenario " + std::to_string(i) +
                                  " failed after one resample: " + e2.what());
            }
        }
    });

    BatchGradient out;
    out.gLam = Mat::Zero(d, d);
    Mat dF = Mat::Zero(d, d), dG = Mat::Zero(d, d);
    double F = 0.0, hinge_sum = 0.0;
    int active = 0;
    for (int i = 0; i < D; ++i) {
        F += rds[i].F;
        dF += rds[i].dF_dLam;
        const double slack = rds[i].g - it.alpha;
        if (slack > 0.0) {  // hinge strictly active; the boundary takes the inactive side
            hinge_sum += slack;
            dG += rds[i].dg_dLam;
            ++active;
        }
    }
    F /= D;
    dF /= D;
    const double eta = spec.eta;
    const double G = hinge_sum / (D * eta) + it.alpha;
    dG /= (D * eta);

    const double weight = it.mu + it.nu * (G + it.kappa);
    out.F_value = F;
    out.G_value = G;
    out.gLam = dF + weight * dG;
    out.gLam = 0.5 * (out.gLam + out.gLam.transpose());
    const double dG_dalpha = 1.0 - static_cast<double>(active) / (D * eta);
    out.gAlpha = weight * dG_dalpha;
    out.gKappa = weight;
    return out;
}

/// Batch (F, G) at fixed metric/alpha without any differentiation; used by
/// the safeguard feasibility checks and by finite-difference probes.
struct BatchValue {
    double F = 0.0;
    double G = 0.0;
};

inline BatchValue evaluate_batch(const DrcSpec& spec, const PwaCost& outer_cost,
                                 const MetricMatrix& m, double alpha,
                                 const std::vector<Scenario>& batch,
                                 const SolveSettings& settings = {}) {
    require(!batch.empty(), "evaluate_batch: empty batch");
    const int D = static_cast<int>(batch.size());
    const int nx = spec.nx();
    std::vector<double> Fs(D), gs(D);
    parallel_for(D, [&](std::size_t i) {
        const int L = static_cast<int>(batch[i].w_seq.size()) / nx;
        Vec warm;
        auto controller = [&](const Vec& x, int) {
            auto res = solve_drc(spec, x, m, settings, warm.size() ? &warm : nullptr);
            warm = res.sol.z;
            return res.u0;
        };
        Trajectory traj = rollout(spec.sys, controller, batch[i].x0, batch[i].w_seq);
        Fs[i] = eval_pwa_cost(outer_cost, traj).first;
        gs[i] = eval_constraint_max(spec.sys, traj, all_steps(L));
    });
    BatchValue out;
    Vec g = Eigen::Map<Vec>(gs.data(), D);
    for (double f : Fs) out.F += f;
    out.F /= D;
    out.G = cvar_surrogate(g, alpha, spec.eta);
    return out;
}

struct HistoryRow {
    int k = 0;
    double F = 0.0;
    double G = 0.0;
    double feasibility = 0.0;  // |G + kappa| on the evaluation batch
    double mu = 0.0;
    double nu = 0.0;
    Vec eigenvalues;
};

struct TrainResult {
    MetricMatrix lambda;
    double alpha = 0.0;
    double kappa = 0.0;
    std::vector<HistoryRow> history;
    bool converged = false;
};

/// Gradient provider and feasibility evaluator abstract the sampled problem
/// so the safeguarded loop can be exercised on synthetic fixtures.
using GradientProvider = std::function<BatchGradient(const OuterIterate&, int k, int t)>;
using FeasibilityEvaluator = std::function<BatchValue(const OuterIterate&, int k)>;

/// Algorithm 1: safeguarded stochastic augmented Lagrangian loop over
/// (Lambda, alpha, kappa) with (mu, nu) safeguard updates.
inline TrainResult train_loop(const LearnerConfig& cfg, const Mat& lambda_init,
                              const GradientProvider& grad, const FeasibilityEvaluator& feval) {
    cfg.validate();
    TrainResult result{project_metric(lambda_init, cfg.eig_lo, cfg.eig_hi)};
    OuterIterate it{result.lambda, cfg.alpha0, cfg.kappa0,
                    std::min(std::max(cfg.mu0, cfg.mu_min), cfg.mu_max), cfg.nu0};

    long global_t = 0;
    for (int k = 1; k <= cfg.k_max; ++k) {
        for (int t = 1; t <= cfg.t_max; ++t) {
            ++global_t;
            const double delta = cfg.step.at(cfg.global_step_index ? global_t : t);
            BatchGradient g = grad(it, k, t);
            it.alpha = std::clamp(it.alpha - delta * g.gAlpha, cfg.alpha_lo, cfg.alpha_hi);
            it.kappa = std::clamp(std::max(it.kappa - delta * g.gKappa, 0.0), 0.0, cfg.kappa_max);
            it.lambda = project_metric(it.lambda.lambda() - delta * g.gLam, cfg.eig_lo,
                                       cfg.eig_hi);
            require(it.kappa >= 0.0 && it.mu >= cfg.mu_min && it.mu <= cfg.mu_max,
                    "train: iterate left its box");
        }

        BatchValue ev = feval(it, k);
        const double feas = std::abs(ev.G + it.kappa);
        result.history.push_back({k, ev.F, ev.G, feas, it.mu, it.nu, it.lambda.eigenvalues()});

        if (feas <= cfg.eps_feas) {
            result.lambda = it.lambda;
            result.alpha = it.alpha;
            result.kappa = it.kappa;
            result.converged = true;
            return result;
        }
        if (feas <= cfg.tau * it.g_best) {
            it.mu = std::clamp(it.mu + it.nu * (ev.G + it.kappa), cfg.mu_min, cfg.mu_max);
            it.g_best = feas;
        } else {
            it.nu *= cfg.sigma;
        }
    }
    result.lambda = it.lambda;
    result.alpha = it.alpha;
    result.kappa = it.kappa;
    return result;
}

/// Full training entry point: wires the sampled-batch gradient provider and
/// the fresh-batch feasibility evaluator into the safeguarded loop. A failed
/// scenario is resampled once (with a bumped counter); repeated failure
/// aborts the run.
inline TrainResult train(const DrcSpec& spec, const PwaCost& outer_cost, const LearnerConfig& cfg,
                         const ScenarioSampler& sampler, const Mat& lambda_init) {
    cfg.validate();
    std::uint64_t counter = 0;

    auto draw_batch = [&](int size) {
        std::vector<Scenario> batch(size);
        for (int i = 0; i < size; ++i) batch[i] = sampler(counter++);
        return batch;
    };

    GradientProvider grad = [&](const OuterIterate& it, int, int) {
        auto batch = draw_batch(cfg.batch_D);
        const std::uint64_t base = counter;
        counter += cfg.batch_D;  // reserve substreams for potential resamples
        return batch_gradient(spec, outer_cost, it, batch, cfg.solve, &sampler, base);
    };
    FeasibilityEvaluator feval = [&](const OuterIterate& it, int) {
        auto batch = draw_batch(cfg.batch_D * cfg.eval_batch_factor);
        return evaluate_batch(spec, outer_cost, it.lambda, it.alpha, batch, cfg.solve);
    };
    return train_loop(cfg, lambda_init, grad, feval);
}

}  // namespace anisodrc
