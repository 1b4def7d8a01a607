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

#include <optional>

#include "anisodrc/diffconic.hpp"
#include "anisodrc/metric.hpp"
#include "anisodrc/system.hpp"

namespace anisodrc {

/// Disturbance-sequence sample set: row i is the stacked T-step sample.
struct EmpiricalSamples {
    Mat rows;  // N x (n_x T)

    int count() const { return static_cast<int>(rows.rows()); }
    int dim() const { return static_cast<int>(rows.cols()); }

    void validate(int nxT) const {
        require(count() >= 1, "EmpiricalSamples: N must be >= 1");
        require_dim(dim() == nxT, "EmpiricalSamples: sample dimension != n_x*T");
    }
};

/// Everything that defines one inner distributionally robust control problem
/// except the current state and the metric.
struct DrcSpec {
    LinearSystem sys;
    StackedDynamics stacked;
    EmpiricalSamples samples;
    PwaCost cost;  // horizon pieces: a_j over [x_1..x_T], b_j over [x_0; u_0..u_{T-1}]
    double eta = 0.1;
    double eps = 0.1;

    // Bounded-support reformulation data: support {w : E w <= e}.
    bool bounded_support = false;
    Mat support_E;
    Vec support_e;

    // Optional robust nonnegativity of every input coordinate over a per-step
    // disturbance box, enforced through support-function dual rows on (M, v).
    bool robust_nonneg_inputs = false;
    Vec w_lo, w_hi;  // stacked bounds (n_x T)

    // Optional artificial decision box (|decision| <= bound on every column);
    // off when <= 0. Stress-test switch only.
    double decision_box = 0.0;

    void validate() const {
        sys.validate();
        require(stacked.T >= 1, "DrcSpec: stacked horizon missing");
        const int d = sys.nx() * stacked.T;
        samples.validate(d);
        cost.validate();
        require_dim(cost.pieces[0].a.size() == d &&
                        cost.pieces[0].b.size() == sys.nx() + sys.nu() * stacked.T,
                    "DrcSpec: cost piece dimensions do not match the horizon");
        require(eta > 0.0 && eta < 1.0, "DrcSpec: eta must lie in (0,1)");
        require(eps >= 0.0, "DrcSpec: eps must be >= 0");
        if (bounded_support) {
            require_dim(support_E.cols() == d && support_E.rows() == support_e.size(),
                        "DrcSpec: support box dimensions");
        }
        if (robust_nonneg_inputs)
            require_dim(w_lo.size() == d && w_hi.size() == d, "DrcSpec: w box dimensions");
    }

    int nx() const { return sys.nx(); }
    int nu() const { return sys.nu(); }
    int T() const { return stacked.T; }
    int N() const { return samples.count(); }
    int n_j() const { return static_cast<int>(cost.pieces.size()); }
    int n_c() const { return sys.nc(); }
    int wdim() const { return sys.nx() * stacked.T; }
};

/// Column offsets of the compiled decision vector, in the fixed order
/// lambda, lambda~, s_1..s_N, q_1..q_N, t, v, vec(M), then dual columns.
struct VarMap {
    int lambda = 0;
    int lambda_tilde = 1;
    int s0 = 2;
    int q0 = 0;
    int tvar = 0;
    int v0 = 0;
    int m0 = 0;
    int n_M = 0;
    std::vector<std::pair<int, int>> mvec_entries;  // (row, col) of M per mvec column

    // Bounded-support duals: o blocks per (i, j), r blocks per (i, ell).
    int o0 = -1, r0 = -1;
    int p_box = 0;
    // Robust-input duals: per input row, p then q over that row's w scope.
    std::vector<int> pq0;
    std::vector<int> pq_scope;

    int cols = 0;

    int col_s(int i) const { return s0 + i; }
    int col_q(int i) const { return q0 + i; }
    int col_o(int i, int j, int n_j) const { return o0 + (i * n_j + j) * p_box; }
    int col_r(int i, int ell, int n_ell) const { return r0 + (i * n_ell + ell) * p_box; }
};

struct RowMap {
    enum class Kind {
        RobustEq,
        Epigraph,
        CvarAggregate,
        Hinge,
        QNonneg,
        RobustRow,
        DualNonneg,
        DecisionBox,
        CostSoc,
        ConstraintSoc
    };
    struct Block {
        Kind kind;
        int i = -1;  // sample index where applicable
        int j = -1;  // piece / constraint-piece index where applicable
        int row0 = 0;
        int dim = 0;
    };
    std::vector<Block> blocks;

    static const char* kind_name(Kind k) {
        switch (k) {
            case Kind::RobustEq: return "robust_eq";
            case Kind::Epigraph: return "epigraph";
            case Kind::CvarAggregate: return "cvar_aggregate";
            case Kind::Hinge: return "hinge";
            case Kind::QNonneg: return "q_nonneg";
            case Kind::RobustRow: return "robust_row";
            case Kind::DualNonneg: return "dual_nonneg";
            case Kind::DecisionBox: return "decision_box";
            case Kind::CostSoc: return "cost_soc";
            case Kind::ConstraintSoc: return "constraint_soc";
        }
        return "?";
    }

    int count(Kind k) const {
        int c = 0;
        for (const auto& b : blocks)
            if (b.kind == k) ++c;
        return c;
    }
    int rows_of(Kind k) const {
        int c = 0;
        for (const auto& b : blocks)
            if (b.kind == k) c += b.dim;
        return c;
    }
};

/// One second-order cone block whose data depends on the metric: the vector
/// rows restricted to the participating columns equal Lambda^{-1} times a
/// metric-independent base, so the whole Lambda-derivative of the problem
/// data factors through these blocks plus the two radius entries.
struct MetricSocBlock {
    int head_row = 0;               // row of the (lambda / lambda~) head
    std::vector<int> cols;          // global columns; rows.cols()-1 local cols + h
    Mat rows;                       // d x (cols.size() + 1): [G entries | h]
};

struct DrcCompilation {
    ConicProblem problem;
    VarMap varmap;
    RowMap rowmap;

    std::vector<MetricSocBlock> socs;
    int cvar_row = -1;
    Mat dh_dx0;  // m x n_x

    Mat lambda_inv;
    Vec top_eigvec;
    double eps_base = 0.0;
    double radius_value = 0.0;

    int nu = 0, nx = 0, T = 0;
};

/// Disturbance-feedback policy u = M w + v with strictly lower
/// block-triangular M.
struct Policy {
    Mat M;
    Vec v;
};

namespace detail {

struct PieceData {
    Vec a;       // over y (n_x T)
    Vec bx;      // x0 part of b
    Vec bu;      // input part of b
    double c = 0.0;
    Vec beta;    // bu + L_u' a
    Vec Ha;      // H' a
    Vec hx;      // L_x' a + bx (x0 multiplier in the row constant)
};

inline std::vector<PieceData> cost_pieces(const DrcSpec& spec) {
    const int nx = spec.nx();
    const Mat Lx = spec.stacked.L.leftCols(nx);
    const Mat Lu = spec.stacked.L.rightCols(spec.nu() * spec.T());
    std::vector<PieceData> out;
    for (const auto& p : spec.cost.pieces) {
        PieceData d;
        d.a = p.a;
        d.bx = p.b.head(nx);
        d.bu = p.b.tail(spec.nu() * spec.T());
        d.c = p.c;
        d.beta = d.bu + Lu.transpose() * d.a;
        d.Ha = spec.stacked.H.transpose() * d.a;
        d.hx = Lx.transpose() * d.a + d.bx;
        out.push_back(std::move(d));
    }
    return out;
}

/// Constraint pieces: prediction step k = 1..T pairs the state x_k with the
/// input u_{k-1} driving it; one piece per (k, constraint row).
inline std::vector<PieceData> constraint_pieces(const DrcSpec& spec) {
    const int nx = spec.nx(), nu = spec.nu(), T = spec.T(), nc = spec.n_c();
    const Mat Lx = spec.stacked.L.leftCols(nx);
    const Mat Lu = spec.stacked.L.rightCols(nu * T);
    std::vector<PieceData> out;
    for (int k = 1; k <= T; ++k) {
        for (int c = 0; c < nc; ++c) {
            PieceData d;
            d.a = Vec::Zero(nx * T);
            d.a.segment((k - 1) * nx, nx) = spec.sys.Fx.col(c);
            d.bx = Vec::Zero(nx);
            d.bu = Vec::Zero(nu * T);
            d.bu.segment((k - 1) * nu, nu) = spec.sys.Fu.col(c);
            d.c = spec.sys.f[c];
            d.beta = d.bu + Lu.transpose() * d.a;
            d.Ha = spec.stacked.H.transpose() * d.a;
            d.hx = Lx.transpose() * d.a + d.bx;
            out.push_back(std::move(d));
        }
    }
    return out;
}

}  // namespace detail

/// Compiles the inner anisotropic-Wasserstein DRC at state x0 under metric m
/// into a cone program. Handles both the unbounded-support form and the
/// bounded-support form with per-(sample, piece) dual columns.
inline DrcCompilation compile(const DrcSpec& spec, const Vec& x0, const MetricMatrix& m) {
    spec.validate();
    const int nx = spec.nx(), nu = spec.nu(), T = spec.T(), N = spec.N();
    const int n_j = spec.n_j(), nc = spec.n_c();
    const int d = nx * T;
    require_dim(x0.size() == nx, "compile: x0 dimension");
    require_dim(m.dim() == d, "compile: metric dimension must be n_x*T");

    const bool bounded = spec.bounded_support;
    const Mat& Li = m.inverse();
    const double eps_lam = radius(m, spec.eps);

    auto cps = detail::cost_pieces(spec);
    auto gps = detail::constraint_pieces(spec);
    const int n_ell = static_cast<int>(gps.size());  // T * n_c

    DrcCompilation comp;
    comp.nu = nu;
    comp.nx = nx;
    comp.T = T;
    comp.lambda_inv = Li;
    comp.top_eigvec = m.top_eigvec();
    comp.eps_base = spec.eps;
    comp.radius_value = eps_lam;

    // ---- columns ----
    VarMap& vm = comp.varmap;
    vm.q0 = vm.s0 + N;
    vm.tvar = vm.q0 + N;
    vm.v0 = vm.tvar + 1;
    vm.m0 = vm.v0 + nu * T;
    for (int i = 1; i < T; ++i)
        for (int j = 0; j < i; ++j)
            for (int cc = 0; cc < nx; ++cc)
                for (int rr = 0; rr < nu; ++rr)
                    vm.mvec_entries.emplace_back(i * nu + rr, j * nx + cc);
    vm.n_M = static_cast<int>(vm.mvec_entries.size());
    int ncols = vm.m0 + vm.n_M;
    if (bounded) {
        vm.p_box = static_cast<int>(spec.support_e.size());
        vm.o0 = ncols;
        ncols += N * n_j * vm.p_box;
        vm.r0 = ncols;
        ncols += N * n_ell * vm.p_box;
    }
    if (spec.robust_nonneg_inputs) {
        vm.pq0.resize(nu * T, -1);
        vm.pq_scope.resize(nu * T, 0);
        for (int p_row = 0; p_row < nu * T; ++p_row) {
            const int blk = p_row / nu;
            const int scope = blk * nx;
            vm.pq0[p_row] = ncols;
            vm.pq_scope[p_row] = scope;
            ncols += 2 * scope;
        }
    }
    vm.cols = ncols;

    // ---- rows ----
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> hvals;
    RowMap& rm = comp.rowmap;
    int row = 0;
    auto push_h = [&](double v) { hvals.push_back(v); };

    // Zero-cone rows first: p - q = m entry-wise for the robust-input duals.
    int zero_rows = 0;
    if (spec.robust_nonneg_inputs) {
        for (int p_row = 0; p_row < nu * T; ++p_row) {
            const int scope = vm.pq_scope[p_row];
            if (scope == 0) continue;
            RowMap::Block blk{RowMap::Kind::RobustEq, p_row, -1, row, scope};
            for (int c = 0; c < scope; ++c) {
                trips.emplace_back(row, vm.pq0[p_row] + c, 1.0);
                trips.emplace_back(row, vm.pq0[p_row] + scope + c, -1.0);
                // locate the mvec entry (p_row, c)
                int mcol = -1;
                for (int k = 0; k < vm.n_M; ++k)
                    if (vm.mvec_entries[k].first == p_row && vm.mvec_entries[k].second == c) {
                        mcol = vm.m0 + k;
                        break;
                    }
                require(mcol >= 0, "compile: mvec entry not found for robust scope");
                trips.emplace_back(row, mcol, -1.0);
                push_h(0.0);
                ++row;
            }
            rm.blocks.push_back(blk);
        }
        zero_rows = row;
    }

    // Nonnegative rows.
    const int nonneg_start = row;

    // (a) cost epigraph rows, one per (sample, piece).
    for (int i = 0; i < N; ++i) {
        const Vec w = spec.samples.rows.row(i).transpose();
        for (int j = 0; j < n_j; ++j) {
            const auto& pc = cps[j];
            for (int r = 0; r < nu * T; ++r)
                if (pc.beta[r] != 0.0) trips.emplace_back(row, vm.v0 + r, pc.beta[r]);
            for (int k = 0; k < vm.n_M; ++k) {
                const auto [mr, mc] = vm.mvec_entries[k];
                const double coeff = pc.beta[mr] * w[mc];
                if (coeff != 0.0) trips.emplace_back(row, vm.m0 + k, coeff);
            }
            trips.emplace_back(row, vm.col_s(i), -1.0);
            if (bounded) {
                const int o = vm.col_o(i, j, n_j);
                const Vec coeff = spec.support_e - spec.support_E * w;
                for (int c = 0; c < vm.p_box; ++c)
                    if (coeff[c] != 0.0) trips.emplace_back(row, o + c, coeff[c]);
            }
            push_h(-(pc.hx.dot(x0) + pc.Ha.dot(w) + pc.c));
            rm.blocks.push_back({RowMap::Kind::Epigraph, i, j, row, 1});
            ++row;
        }
    }

    // (b) CVaR aggregate row: lambda~ * eps(Lambda) + (1/N) sum q_i <= t eta.
    comp.cvar_row = row;
    trips.emplace_back(row, vm.lambda_tilde, eps_lam);
    for (int i = 0; i < N; ++i) trips.emplace_back(row, vm.col_q(i), 1.0 / N);
    trips.emplace_back(row, vm.tvar, -spec.eta);
    push_h(0.0);
    rm.blocks.push_back({RowMap::Kind::CvarAggregate, -1, -1, row, 1});
    ++row;

    // (c) hinge rows: expr + t <= q_i per (sample, constraint piece).
    for (int i = 0; i < N; ++i) {
        const Vec w = spec.samples.rows.row(i).transpose();
        for (int ell = 0; ell < n_ell; ++ell) {
            const auto& pc = gps[ell];
            for (int r = 0; r < nu * T; ++r)
                if (pc.beta[r] != 0.0) trips.emplace_back(row, vm.v0 + r, pc.beta[r]);
            for (int k = 0; k < vm.n_M; ++k) {
                const auto [mr, mc] = vm.mvec_entries[k];
                const double coeff = pc.beta[mr] * w[mc];
                if (coeff != 0.0) trips.emplace_back(row, vm.m0 + k, coeff);
            }
            trips.emplace_back(row, vm.tvar, 1.0);
            trips.emplace_back(row, vm.col_q(i), -1.0);
            if (bounded) {
                const int rcol = vm.col_r(i, ell, n_ell);
                const Vec coeff = spec.support_e - spec.support_E * w;
                for (int c = 0; c < vm.p_box; ++c)
                    if (coeff[c] != 0.0) trips.emplace_back(row, rcol + c, coeff[c]);
            }
            push_h(-(pc.hx.dot(x0) + pc.Ha.dot(w) + pc.c));
            rm.blocks.push_back({RowMap::Kind::Hinge, i, ell, row, 1});
            ++row;
        }
    }

    // (d) q_i >= 0.
    for (int i = 0; i < N; ++i) {
        trips.emplace_back(row, vm.col_q(i), -1.0);
        push_h(0.0);
        rm.blocks.push_back({RowMap::Kind::QNonneg, i, -1, row, 1});
        ++row;
    }

    // (e) robust input nonnegativity: v_row + lo'p - hi'q >= 0.
    if (spec.robust_nonneg_inputs) {
        for (int p_row = 0; p_row < nu * T; ++p_row) {
            const int scope = vm.pq_scope[p_row];
            trips.emplace_back(row, vm.v0 + p_row, -1.0);
            for (int c = 0; c < scope; ++c) {
                if (spec.w_lo[c] != 0.0)
                    trips.emplace_back(row, vm.pq0[p_row] + c, -spec.w_lo[c]);
                if (spec.w_hi[c] != 0.0)
                    trips.emplace_back(row, vm.pq0[p_row] + scope + c, spec.w_hi[c]);
            }
            push_h(0.0);
            rm.blocks.push_back({RowMap::Kind::RobustRow, p_row, -1, row, 1});
            ++row;
        }
        // Dual nonnegativity p, q >= 0.
        for (int p_row = 0; p_row < nu * T; ++p_row) {
            const int scope = vm.pq_scope[p_row];
            for (int c = 0; c < 2 * scope; ++c) {
                trips.emplace_back(row, vm.pq0[p_row] + c, -1.0);
                push_h(0.0);
                ++row;
            }
            if (scope > 0)
                rm.blocks.push_back({RowMap::Kind::DualNonneg, p_row, -1, row - 2 * scope,
                                     2 * scope});
        }
    }

    // (f) bounded-support dual nonnegativity o, r >= 0.
    if (bounded) {
        const int o_count = N * n_j * vm.p_box;
        const int r_count = N * n_ell * vm.p_box;
        for (int c = 0; c < o_count + r_count; ++c) {
            trips.emplace_back(row, vm.o0 + c, -1.0);
            push_h(0.0);
            ++row;
        }
        rm.blocks.push_back({RowMap::Kind::DualNonneg, -1, -1, row - o_count - r_count,
                             o_count + r_count});
    }

    // (g) artificial decision box (stress switch).
    if (spec.decision_box > 0.0) {
        const int box_cols = vm.m0 + vm.n_M;  // primal decisions only
        for (int c = 0; c < box_cols; ++c) {
            trips.emplace_back(row, c, 1.0);
            push_h(spec.decision_box);
            ++row;
            trips.emplace_back(row, c, -1.0);
            push_h(spec.decision_box);
            ++row;
        }
        rm.blocks.push_back({RowMap::Kind::DecisionBox, -1, -1, row - 2 * box_cols,
                             2 * box_cols});
    }

    const int nonneg_rows = row - nonneg_start;

    // ---- second-order cone blocks ----
    // Each block contributes 1 + d rows: a head row tied to lambda or
    // lambda~, then the metric-weighted vector rows.
    auto emit_soc = [&](int head_col, const Vec& kvec, const detail::PieceData& pc,
                        double sgn_m, int o_col, RowMap::Kind kind, int i_idx, int j_idx) {
        // Norm argument: Li * (sgn_m * (M' beta + H'a) + E' o), affine in the
        // decision columns. kvec = H' a.
        MetricSocBlock blk;
        blk.head_row = row;
        trips.emplace_back(row, head_col, -1.0);
        push_h(0.0);
        ++row;

        // Local base: columns = mvec entries (+ o block) + constant.
        const int n_loc = vm.n_M + (o_col >= 0 ? vm.p_box : 0);
        Mat base = Mat::Zero(d, n_loc + 1);
        for (int k = 0; k < vm.n_M; ++k) {
            const auto [mr, mc] = vm.mvec_entries[k];
            base(mc, k) = sgn_m * pc.beta[mr];
        }
        if (o_col >= 0) base.block(0, vm.n_M, d, vm.p_box) = spec.support_E.transpose();
        base.col(n_loc) = sgn_m * kvec;

        // rows = [G | h] for the vector part: G = -Li*A, h = Li*c with
        // A the decision part and c the constant part of the argument.
        Mat arg = Li * base;
        blk.rows.resize(d, n_loc + 1);
        blk.rows.leftCols(n_loc) = -arg.leftCols(n_loc);
        blk.rows.col(n_loc) = arg.col(n_loc);
        // Constant-part sign: argument constant is +arg_const, slack rows are
        // h - Gx = A x + c, so h = +c.
        blk.cols.reserve(n_loc);
        for (int k = 0; k < vm.n_M; ++k) blk.cols.push_back(vm.m0 + k);
        if (o_col >= 0)
            for (int c = 0; c < vm.p_box; ++c) blk.cols.push_back(o_col + c);

        for (int rr = 0; rr < d; ++rr) {
            for (int c = 0; c < n_loc; ++c)
                if (blk.rows(rr, c) != 0.0) trips.emplace_back(row, blk.cols[c], blk.rows(rr, c));
            push_h(blk.rows(rr, n_loc));
            ++row;
        }
        rm.blocks.push_back({kind, i_idx, j_idx, blk.head_row, d + 1});
        comp.socs.push_back(std::move(blk));
    };

    std::vector<Cone> soc_cones;
    if (!bounded) {
        for (int j = 0; j < n_j; ++j) {
            emit_soc(vm.lambda, cps[j].Ha, cps[j], 1.0, -1, RowMap::Kind::CostSoc, -1, j);
            soc_cones.push_back(Cone::soc(1 + d));
        }
        for (int ell = 0; ell < n_ell; ++ell) {
            emit_soc(vm.lambda_tilde, gps[ell].Ha, gps[ell], 1.0, -1,
                     RowMap::Kind::ConstraintSoc, -1, ell);
            soc_cones.push_back(Cone::soc(1 + d));
        }
    } else {
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < n_j; ++j) {
                emit_soc(vm.lambda, cps[j].Ha, cps[j], -1.0, vm.col_o(i, j, n_j),
                         RowMap::Kind::CostSoc, i, j);
                soc_cones.push_back(Cone::soc(1 + d));
            }
        for (int i = 0; i < N; ++i)
            for (int ell = 0; ell < n_ell; ++ell) {
                emit_soc(vm.lambda_tilde, gps[ell].Ha, gps[ell], -1.0, vm.col_r(i, ell, n_ell),
                         RowMap::Kind::ConstraintSoc, i, ell);
                soc_cones.push_back(Cone::soc(1 + d));
            }
    }

    // ---- assemble ----
    const int mrows = row;
    ConicProblem& p = comp.problem;
    p.r = Vec::Zero(vm.cols);
    p.r[vm.lambda] = eps_lam;
    for (int i = 0; i < N; ++i) p.r[vm.col_s(i)] = 1.0 / N;
    p.h = Eigen::Map<Vec>(hvals.data(), static_cast<Eigen::Index>(hvals.size()));
    p.G.resize(mrows, vm.cols);
    p.G.setFromTriplets(trips.begin(), trips.end());
    if (zero_rows > 0) p.cones.push_back(Cone::zero(zero_rows));
    p.cones.push_back(Cone::nonneg(nonneg_rows));
    for (auto& c : soc_cones) p.cones.push_back(c);
    p.validate();

    // x0 sensitivity of the right-hand side.
    comp.dh_dx0 = Mat::Zero(mrows, nx);
    for (const auto& blk : rm.blocks) {
        if (blk.kind == RowMap::Kind::Epigraph)
            comp.dh_dx0.row(blk.row0) = -cps[blk.j].hx.transpose();
        else if (blk.kind == RowMap::Kind::Hinge)
            comp.dh_dx0.row(blk.row0) = -gps[blk.j].hx.transpose();
    }
    return comp;
}

/// Bounded-support entry point; requires the spec to carry the support box.
inline DrcCompilation compile_bounded(const DrcSpec& spec, const Vec& x0, const MetricMatrix& m) {
    require(spec.bounded_support, "compile_bounded: spec has no bounded support box");
    return compile(spec, x0, m);
}

inline Policy extract_policy(const DrcCompilation& comp, const ConicSolution& sol) {
    require(sol.status == SolveStatus::Optimal, "extract_policy: solution not optimal");
    const VarMap& vm = comp.varmap;
    Policy pol;
    pol.M = Mat::Zero(comp.nu * comp.T, comp.nx * comp.T);
    for (int k = 0; k < vm.n_M; ++k) {
        const auto [mr, mc] = vm.mvec_entries[k];
        pol.M(mr, mc) = sol.x[vm.m0 + k];
    }
    pol.v = sol.x.segment(vm.v0, comp.nu * comp.T);
    return pol;
}

inline Vec first_control(const Policy& pol, int nu) { return pol.v.head(nu); }

/// Data-space direction induced by a symmetric metric direction dLam:
/// every Lambda^{-1} occurrence moves by -Li dLam Li and both radius entries
/// by eps * u1' dLam u1.
inline DataPerturbation data_jacobian(const DrcCompilation& comp, const Mat& dLam) {
    const auto& p = comp.problem;
    require_dim(dLam.rows() == comp.lambda_inv.rows() && dLam.cols() == comp.lambda_inv.cols(),
                "data_jacobian: direction dimension");
    DataPerturbation out;
    out.dh = Vec::Zero(p.m());
    out.dr = Vec::Zero(p.n());
    std::vector<Eigen::Triplet<double>> trips;

    const Mat LidLam = comp.lambda_inv * dLam;
    for (const auto& blk : comp.socs) {
        const Mat dRows = -LidLam * blk.rows;
        const int n_loc = static_cast<int>(blk.cols.size());
        for (int rr = 0; rr < dRows.rows(); ++rr) {
            const int grow = blk.head_row + 1 + rr;
            for (int c = 0; c < n_loc; ++c)
                if (dRows(rr, c) != 0.0) trips.emplace_back(grow, blk.cols[c], dRows(rr, c));
            out.dh[grow] = dRows(rr, n_loc);
        }
    }
    const double deps =
        comp.eps_base * comp.top_eigvec.dot(dLam * comp.top_eigvec);
    out.dr[comp.varmap.lambda] = deps;
    if (deps != 0.0) trips.emplace_back(comp.cvar_row, comp.varmap.lambda_tilde, deps);
    out.dG.resize(p.m(), p.n());
    out.dG.setFromTriplets(trips.begin(), trips.end());
    return out;
}

/// Transpose pairing of data_jacobian: pulls a data-space gradient back to a
/// symmetric metric gradient.
inline Mat metric_pullback(const DrcCompilation& comp, const DataGradient& g) {
    const int d = static_cast<int>(comp.lambda_inv.rows());
    Mat acc = Mat::Zero(d, d);
    for (const auto& blk : comp.socs) {
        const int n_loc = static_cast<int>(blk.cols.size());
        Mat grows(d, n_loc + 1);
        for (int rr = 0; rr < d; ++rr) {
            const int grow = blk.head_row + 1 + rr;
            for (int c = 0; c < n_loc; ++c) grows(rr, c) = g.dG(grow, blk.cols[c]);
            grows(rr, n_loc) = g.dh[grow];
        }
        acc.noalias() -= comp.lambda_inv * grows * blk.rows.transpose();
    }
    const double geps = g.dr[comp.varmap.lambda] + g.dG(comp.cvar_row, comp.varmap.lambda_tilde);
    acc += (geps * comp.eps_base) * (comp.top_eigvec * comp.top_eigvec.transpose());
    return 0.5 * (acc + acc.transpose());
}

struct DrcSolveResult {
    Vec u0;
    DrcCompilation comp;
    ConicSolution sol;
};

/// Compile, solve, extract, take the first control.
inline DrcSolveResult solve_drc(const DrcSpec& spec, const Vec& x0, const MetricMatrix& m,
                                const SolveSettings& settings = {}, const Vec* warm_z = nullptr) {
    DrcSolveResult out;
    out.comp = compile(spec, x0, m);
    out.sol = solve(out.comp.problem, settings, warm_z);
    if (out.sol.status != SolveStatus::Optimal)
        throw SolverError(std::string("solve_drc: inner cone program returned ") +
                          to_string(out.sol.status));
    Policy pol = extract_policy(out.comp, out.sol);
    out.u0 = first_control(pol, spec.nu());
    return out;
}

struct ControllerDerivatives {
    std::vector<Mat> du0_dLam;  // n_u symmetric (d x d) matrices
    Mat du0_dx0;                // n_u x n_x
};

/// Derivatives of the first control with respect to the metric and the
/// current state, via one adjoint solve per control coordinate on the shared
/// factorization. Columns the problem does not touch at all have zero
/// derivative by convention (the selected conservative element).
inline ControllerDerivatives controller_derivatives(
    const DrcCompilation& comp, const ConicSolution& sol,
    DegeneracyPolicy policy = DegeneracyPolicy::MinNorm) {
    const int nu = comp.nu;
    const int d = static_cast<int>(comp.lambda_inv.rows());
    ControllerDerivatives out;
    out.du0_dLam.assign(nu, Mat::Zero(d, d));
    out.du0_dx0 = Mat::Zero(nu, comp.nx);

    std::vector<bool> structural_zero(nu, false);
    bool any_live = false;
    for (int c = 0; c < nu; ++c) {
        const int col = comp.varmap.v0 + c;
        bool empty = comp.problem.r[col] == 0.0;
        if (empty) {
            empty = true;
            for (SpMat::InnerIterator it(comp.problem.G, col); it; ++it)
                if (it.value() != 0.0) {
                    empty = false;
                    break;
                }
        }
        structural_zero[c] = empty;
        any_live |= !empty;
    }
    if (!any_live) return out;

    SolutionDerivative deriv(comp.problem, sol, policy);
    for (int c = 0; c < nu; ++c) {
        if (structural_zero[c]) continue;
        Vec gx = Vec::Zero(comp.problem.n());
        gx[comp.varmap.v0 + c] = 1.0;
        DataGradient g = deriv.adjoint(gx);
        out.du0_dLam[c] = metric_pullback(comp, g);
        out.du0_dx0.row(c) = g.dh.transpose() * comp.dh_dx0;
    }
    return out;
}

/// The metric part only, as the spec's control_jacobian operation.
inline std::vector<Mat> control_jacobian(const DrcCompilation& comp, const ConicSolution& sol,
                                         DegeneracyPolicy policy = DegeneracyPolicy::MinNorm) {
    return controller_derivatives(comp, sol, policy).du0_dLam;
}

/// Compilation dump: the conic JSON schema plus the row-block labels.
inline nlohmann::json to_json(const DrcCompilation& comp) {
    nlohmann::json j = to_json(comp.problem);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& b : comp.rowmap.blocks)
        rows.push_back({{"kind", RowMap::kind_name(b.kind)},
                        {"i", b.i},
                        {"j", b.j},
                        {"row0", b.row0},
                        {"dim", b.dim}});
    j["rowmap"] = rows;
    j["varmap"] = {{"lambda", comp.varmap.lambda},
                   {"lambda_tilde", comp.varmap.lambda_tilde},
                   {"s0", comp.varmap.s0},
                   {"q0", comp.varmap.q0},
                   {"t", comp.varmap.tvar},
                   {"v0", comp.varmap.v0},
                   {"m0", comp.varmap.m0},
                   {"n_M", comp.varmap.n_M},
                   {"cols", comp.varmap.cols}};
    return j;
}

}  // namespace anisodrc
