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

#include <functional>

#include "anisodrc/common.hpp"
#include "anisodrc/rng.hpp"

namespace anisodrc {

/// Linear stochastic system x+ = Ax + Bu + w subject to the rowwise
/// constraint Fx'x + Fu'u + f <= 0 (one constraint per column of Fx/Fu).
struct LinearSystem {
    Mat A;   // n_x x n_x
    Mat B;   // n_x x n_u
    Mat Fx;  // n_x x n_c
    Mat Fu;  // n_u x n_c
    Vec f;   // n_c

    int nx() const { return static_cast<int>(A.rows()); }
    int nu() const { return static_cast<int>(B.cols()); }
    int nc() const { return static_cast<int>(f.size()); }

    void validate() const {
        require_dim(A.rows() == A.cols() && A.rows() >= 1, "LinearSystem: A must be square");
        require_dim(B.rows() == A.rows() && B.cols() >= 1, "LinearSystem: B row count");
        require_dim(Fx.rows() == A.rows() && Fu.rows() == B.cols(), "LinearSystem: Fx/Fu rows");
        require_dim(Fx.cols() == f.size() && Fu.cols() == f.size() && f.size() >= 1,
                    "LinearSystem: constraint counts");
    }
};

/// Stacked-horizon matrices: y = L [x0; u] + H w with y = [x_1; ...; x_T].
struct StackedDynamics {
    Mat L;  // (n_x T) x (n_x + n_u T)
    Mat H;  // (n_x T) x (n_x T)
    int T = 0;
};

inline StackedDynamics build_stacked(const LinearSystem& sys, int T) {
    sys.validate();
    require(T >= 1, "build_stacked: horizon must be >= 1");
    const int nx = sys.nx(), nu = sys.nu();
    StackedDynamics sd;
    sd.T = T;
    sd.L = Mat::Zero(nx * T, nx + nu * T);
    sd.H = Mat::Zero(nx * T, nx * T);

    std::vector<Mat> Apow(T + 1);
    Apow[0] = Mat::Identity(nx, nx);
    for (int k = 1; k <= T; ++k) Apow[k] = sys.A * Apow[k - 1];

    for (int t = 0; t < T; ++t) {
        sd.L.block(t * nx, 0, nx, nx) = Apow[t + 1];
        for (int j = 0; j <= t; ++j) {
            sd.L.block(t * nx, nx + j * nu, nx, nu) = Apow[t - j] * sys.B;
            sd.H.block(t * nx, j * nx, nx, nx) = Apow[t - j];
        }
    }
    return sd;
}

/// Input-column block of L (all rows): the map u -> y contribution.
inline Mat input_columns(const StackedDynamics& sd, int nx) {
    return sd.L.rightCols(sd.L.cols() - nx);
}

struct DisturbanceModel {
    enum class Kind { Gaussian, TruncatedGaussian, Empirical };
    Kind kind = Kind::Gaussian;

    // Gaussian
    Vec mean;
    Mat covariance;

    // Truncated Gaussian (per-coordinate independent)
    Vec tg_mean, tg_stdev, lower, upper;

    // Empirical (per-step atoms)
    std::vector<Vec> atoms;

    // Declared support for the stacked T-step disturbance.
    bool bounded_support = false;
    Mat support_E;
    Vec support_e;

    static DisturbanceModel gaussian(Vec mean, Mat covariance) {
        DisturbanceModel m;
        m.kind = Kind::Gaussian;
        m.mean = std::move(mean);
        m.covariance = std::move(covariance);
        require_dim(m.covariance.rows() == m.mean.size() && m.covariance.cols() == m.mean.size(),
                    "gaussian: covariance shape");
        return m;
    }

    static DisturbanceModel truncated_gaussian(Vec mean, Vec stdev, Vec lower, Vec upper) {
        DisturbanceModel m;
        m.kind = Kind::TruncatedGaussian;
        m.tg_mean = std::move(mean);
        m.tg_stdev = std::move(stdev);
        m.lower = std::move(lower);
        m.upper = std::move(upper);
        require_dim(m.tg_mean.size() == m.tg_stdev.size() && m.lower.size() == m.upper.size() &&
                        m.lower.size() == m.tg_mean.size(),
                    "truncated_gaussian: dimension mismatch");
        require((m.lower.array() < m.upper.array()).all(),
                "truncated_gaussian: requires lower < upper");
        return m;
    }

    static DisturbanceModel empirical(std::vector<Vec> atoms) {
        require(!atoms.empty(), "empirical: needs at least one atom");
        DisturbanceModel m;
        m.kind = Kind::Empirical;
        for (std::size_t i = 1; i < atoms.size(); ++i)
            require_dim(atoms[i].size() == atoms[0].size(), "empirical: atom dimensions differ");
        m.atoms = std::move(atoms);
        return m;
    }

    int dim() const {
        switch (kind) {
            case Kind::Gaussian: return static_cast<int>(mean.size());
            case Kind::TruncatedGaussian: return static_cast<int>(tg_mean.size());
            case Kind::Empirical: return static_cast<int>(atoms[0].size());
        }
        return 0;
    }
};

/// Draws one per-step disturbance.
inline Vec sample_step(const DisturbanceModel& model, RngStream& stream) {
    switch (model.kind) {
        case DisturbanceModel::Kind::Gaussian: {
            const int d = model.dim();
            Vec gz(d);
            for (int i = 0; i < d; ++i) gz[i] = stream.normal();
            // Symmetric square root tolerates degenerate covariances.
            Eigen::SelfAdjointEigenSolver<Mat> es(model.covariance);
            Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            return model.mean + es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose() * gz;
        }
        case DisturbanceModel::Kind::TruncatedGaussian: {
            const int d = model.dim();
            Vec out(d);
            constexpr long kAttemptCap = 1000000;
            for (int i = 0; i < d; ++i) {
                long attempts = 0;
                double v;
                do {
                    if (++attempts > kAttemptCap)
                        throw Error("truncated-gaussian rejection sampling exceeded the attempt "
                                    "cap; truncation window is mis-specified");
                    v = stream.normal(model.tg_mean[i], model.tg_stdev[i]);
                } while (v < model.lower[i] || v > model.upper[i]);
                out[i] = v;
            }
            return out;
        }
        case DisturbanceModel::Kind::Empirical:
            return model.atoms[stream.below(model.atoms.size())];
    }
    throw Error("sample_step: invalid model");
}

/// T i.i.d. per-step draws, stacked into one (dim * T) vector.
inline Vec sample_disturbance(const DisturbanceModel& model, int T, RngStream& stream) {
    require(T >= 1, "sample_disturbance: T must be >= 1");
    const int d = model.dim();
    Vec out(d * T);
    for (int t = 0; t < T; ++t) out.segment(t * d, d) = sample_step(model, stream);
    return out;
}

/// Closed-loop record: states x_0..x_L, inputs u_0..u_{L-1}, disturbances.
struct Trajectory {
    std::vector<Vec> states;
    std::vector<Vec> inputs;
    std::vector<Vec> disturbances;

    int steps() const { return static_cast<int>(inputs.size()); }

    /// Relative reconstruction residual of x_{t+1} = Ax_t + Bu_t + w_t.
    double reconstruction_residual(const LinearSystem& sys) const {
        double worst = 0.0;
        for (int t = 0; t < steps(); ++t) {
            Vec pred = sys.A * states[t] + sys.B * inputs[t] + disturbances[t];
            double denom = 1.0 + states[t + 1].norm();
            worst = std::max(worst, (states[t + 1] - pred).norm() / denom);
        }
        return worst;
    }
};

/// Thrown when the controller fails mid-rollout; carries the completed prefix.
class RolloutError : public Error {
  public:
    RolloutError(int step, Trajectory partial, const std::string& what)
        : Error("rollout failed at step " + std::to_string(step) + ": " + what), step_(step),
          partial_(std::move(partial)) {}
    int step() const { return step_; }
    const Trajectory& partial() const { return partial_; }

  private:
    int step_;
    Trajectory partial_;
};

using Controller = std::function<Vec(const Vec& state, int step)>;

/// Rolls the closed loop for L steps; w_seq stacks w_0..w_{L-1}.
inline Trajectory rollout(const LinearSystem& sys, const Controller& controller, const Vec& x0,
                          const Vec& w_seq) {
    sys.validate();
    const int nx = sys.nx();
    require_dim(x0.size() == nx, "rollout: x0 dimension");
    require_dim(w_seq.size() % nx == 0, "rollout: disturbance length not a multiple of n_x");
    const int L = static_cast<int>(w_seq.size()) / nx;

    Trajectory traj;
    traj.states.reserve(L + 1);
    traj.inputs.reserve(L);
    traj.disturbances.reserve(L);
    traj.states.push_back(x0);
    for (int t = 0; t < L; ++t) {
        Vec u;
        try {
            u = controller(traj.states.back(), t);
        } catch (const std::exception& e) {
            throw RolloutError(t, traj, e.what());
        }
        if (u.size() != sys.nu()) throw RolloutError(t, traj, "controller returned wrong input dim");
        Vec w = w_seq.segment(t * nx, nx);
        traj.inputs.push_back(u);
        traj.disturbances.push_back(w);
        traj.states.push_back(sys.A * traj.states.back() + sys.B * u + w);
    }
    return traj;
}

/// Piecewise-affine cost over the stacked trajectory:
/// max_j a_j'[x_1..x_L] + b_j'[x_0; u_0..u_{L-1}] + c_j.
struct PwaCost {
    struct Piece {
        Vec a;  // over stacked states x_1..x_L
        Vec b;  // over [x_0; u_0..u_{L-1}]
        double c = 0.0;
    };
    std::vector<Piece> pieces;

    void validate() const {
        require(!pieces.empty(), "PwaCost: needs at least one piece");
        for (const auto& p : pieces)
            require_dim(p.a.size() == pieces[0].a.size() && p.b.size() == pieces[0].b.size(),
                        "PwaCost: inconsistent piece dimensions");
    }
};

inline double piece_value(const PwaCost::Piece& p, const Trajectory& traj) {
    const int L = traj.steps();
    const int nx = static_cast<int>(traj.states[0].size());
    const int nu = L > 0 ? static_cast<int>(traj.inputs[0].size()) : 0;
    require_dim(p.a.size() == nx * L && p.b.size() == nx + nu * L,
                "piece_value: dimensions do not match trajectory");
    double v = p.c + p.b.head(nx).dot(traj.states[0]);
    for (int t = 0; t < L; ++t) {
        v += p.a.segment(t * nx, nx).dot(traj.states[t + 1]);
        v += p.b.segment(nx + t * nu, nu).dot(traj.inputs[t]);
    }
    return v;
}

/// Max over pieces; ties go to the lowest index.
inline std::pair<double, int> eval_pwa_cost(const PwaCost& cost, const Trajectory& traj) {
    cost.validate();
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t j = 0; j < cost.pieces.size(); ++j) {
        double v = piece_value(cost.pieces[j], traj);
        if (v > best) {
            best = v;
            arg = static_cast<int>(j);
        }
    }
    return {best, arg};
}

struct ConstraintArgmax {
    double value = -std::numeric_limits<double>::infinity();
    int step = -1;
    int row = -1;
};

/// Max over t in range and constraint rows of Fx'x_t + Fu'u_t + f; ties go to
/// the lowest (t, row) in lexicographic order.
inline ConstraintArgmax eval_constraint_argmax(const LinearSystem& sys, const Trajectory& traj,
                                               const std::vector<int>& range) {
    ConstraintArgmax out;
    for (int t : range) {
        require(t >= 0 && t < traj.steps(), "eval_constraint_max: step outside 0..L-1");
        Vec vals = sys.Fx.transpose() * traj.states[t] + sys.Fu.transpose() * traj.inputs[t] + sys.f;
        for (int rrow = 0; rrow < vals.size(); ++rrow) {
            if (vals[rrow] > out.value) {
                out.value = vals[rrow];
                out.step = t;
                out.row = rrow;
            }
        }
    }
    return out;
}

inline double eval_constraint_max(const LinearSystem& sys, const Trajectory& traj,
                                  const std::vector<int>& range) {
    return eval_constraint_argmax(sys, traj, range).value;
}

inline std::vector<int> all_steps(int L) {
    std::vector<int> r(L);
    for (int i = 0; i < L; ++i) r[i] = i;
    return r;
}

}  // namespace anisodrc
