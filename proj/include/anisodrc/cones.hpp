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

#include "anisodrc/common.hpp"

namespace anisodrc {

/// One factor of the cone product K = K_1 x ... x K_p.
struct Cone {
    enum class Kind { Zero, Nonneg, Soc };
    Kind kind;
    int dim;

    static Cone zero(int dim) {
        require_dim(dim >= 1, "zero cone dim must be >= 1");
        return {Kind::Zero, dim};
    }
    static Cone nonneg(int dim) {
        require_dim(dim >= 1, "nonneg cone dim must be >= 1");
        return {Kind::Nonneg, dim};
    }
    static Cone soc(int dim) {
        require_dim(dim >= 2, "soc cone dim must be >= 2");
        return {Kind::Soc, dim};
    }
};

inline int total_dim(const std::vector<Cone>& cones) {
    int m = 0;
    for (const auto& c : cones) m += c.dim;
    return m;
}

namespace detail {

// Projection onto the second-order cone {(t, z) : ||z|| <= t}.
inline Vec project_soc(const Vec& v) {
    const double t = v[0];
    const double nz = v.tail(v.size() - 1).norm();
    if (nz <= t) return v;
    Vec out = Vec::Zero(v.size());
    if (nz <= -t) return out;
    const double c = 0.5 * (t + nz);
    out[0] = c;
    out.tail(v.size() - 1) = (c / nz) * v.tail(v.size() - 1);
    return out;
}

// One element of the generalized Jacobian of project_soc. On the two kink
// surfaces ||z|| = |t| the side with the smaller operator norm is selected
// (Frobenius norm breaks exact ties); the apex returns I/2.
inline Mat dproject_soc(const Vec& v) {
    const int d = static_cast<int>(v.size());
    const double t = v[0];
    const Vec z = v.tail(d - 1);
    const double nz = z.norm();
    if (nz == 0.0 && t == 0.0) return 0.5 * Mat::Identity(d, d);
    auto boundary_jac = [&]() {
        Mat J(d, d);
        const Vec u = z / nz;
        J(0, 0) = 0.5;
        J.block(0, 1, 1, d - 1) = 0.5 * u.transpose();
        J.block(1, 0, d - 1, 1) = 0.5 * u;
        J.block(1, 1, d - 1, d - 1) = ((t + nz) / (2.0 * nz)) * Mat::Identity(d - 1, d - 1) -
                                      (t / (2.0 * nz)) * (u * u.transpose());
        return J;
    };
    if (nz < t) return Mat::Identity(d, d);
    if (nz < -t) return Mat::Zero(d, d);
    if (nz == t) {
        // Tie in operator norm (both sides have norm 1); the smooth-side
        // element has the smaller Frobenius norm.
        return boundary_jac();
    }
    if (nz == -t) return Mat::Zero(d, d);
    return boundary_jac();
}

}  // namespace detail

/// Euclidean projection onto the cone.
inline Vec project_cone(const Cone& c, const Vec& v) {
    require_dim(static_cast<int>(v.size()) == c.dim, "project_cone: dimension mismatch");
    switch (c.kind) {
        case Cone::Kind::Zero:
            return Vec::Zero(v.size());
        case Cone::Kind::Nonneg:
            return v.cwiseMax(0.0);
        case Cone::Kind::Soc:
            return detail::project_soc(v);
    }
    return v;  // unreachable
}

/// One element of the generalized Jacobian of project_cone at v.
/// Kink selection: nonneg at 0 takes the zero side; soc rules are in
/// detail::dproject_soc.
inline Mat dproject_cone(const Cone& c, const Vec& v) {
    require_dim(static_cast<int>(v.size()) == c.dim, "dproject_cone: dimension mismatch");
    switch (c.kind) {
        case Cone::Kind::Zero:
            return Mat::Zero(c.dim, c.dim);
        case Cone::Kind::Nonneg: {
            Mat J = Mat::Zero(c.dim, c.dim);
            for (int i = 0; i < c.dim; ++i) J(i, i) = v[i] > 0.0 ? 1.0 : 0.0;
            return J;
        }
        case Cone::Kind::Soc:
            return detail::dproject_soc(v);
    }
    return Mat();  // unreachable
}

/// Projection onto the dual cone: zero* is free, nonneg* = nonneg,
/// soc* = soc.
inline Vec project_dual_cone(const Cone& c, const Vec& v) {
    if (c.kind == Cone::Kind::Zero) return v;
    return project_cone(c, v);
}

inline Mat dproject_dual_cone(const Cone& c, const Vec& v) {
    if (c.kind == Cone::Kind::Zero) return Mat::Identity(c.dim, c.dim);
    return dproject_cone(c, v);
}

/// Applies the per-block dual-cone projection over the stacked vector.
inline Vec project_dual_cones(const std::vector<Cone>& cones, const Vec& v) {
    Vec out(v.size());
    int off = 0;
    for (const auto& c : cones) {
        out.segment(off, c.dim) = project_dual_cone(c, v.segment(off, c.dim));
        off += c.dim;
    }
    return out;
}

inline Vec project_cones(const std::vector<Cone>& cones, const Vec& v) {
    Vec out(v.size());
    int off = 0;
    for (const auto& c : cones) {
        out.segment(off, c.dim) = project_cone(c, v.segment(off, c.dim));
        off += c.dim;
    }
    return out;
}

/// Membership distance: max over blocks of dist(v_block, K_block), computed
/// via the projection.
inline double cone_distance(const std::vector<Cone>& cones, const Vec& v) {
    double d = 0.0;
    int off = 0;
    for (const auto& c : cones) {
        d = std::max(d, (v.segment(off, c.dim) - project_cone(c, v.segment(off, c.dim))).norm());
        off += c.dim;
    }
    return d;
}

inline double dual_cone_distance(const std::vector<Cone>& cones, const Vec& v) {
    double d = 0.0;
    int off = 0;
    for (const auto& c : cones) {
        d = std::max(d,
                     (v.segment(off, c.dim) - project_dual_cone(c, v.segment(off, c.dim))).norm());
        off += c.dim;
    }
    return d;
}

}  // namespace anisodrc
