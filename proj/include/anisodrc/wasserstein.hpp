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
#include "anisodrc/metric.hpp"
#include "anisodrc/system.hpp"

namespace anisodrc {

struct DiscreteDistribution {
    std::vector<Vec> atoms;
    Vec weights;

    static DiscreteDistribution uniform(std::vector<Vec> atoms) {
        DiscreteDistribution d;
        d.weights = Vec::Constant(static_cast<Eigen::Index>(atoms.size()), 1.0 / atoms.size());
        d.atoms = std::move(atoms);
        d.validate();
        return d;
    }

    void validate() const {
        require(!atoms.empty() && weights.size() == static_cast<Eigen::Index>(atoms.size()),
                "DiscreteDistribution: atom/weight count mismatch");
        require(weights.minCoeff() >= -1e-15, "DiscreteDistribution: negative weight");
        require(std::abs(weights.sum() - 1.0) <= 1e-12, "DiscreteDistribution: weights must sum to 1");
        for (const auto& a : atoms)
            require_dim(a.size() == atoms[0].size(), "DiscreteDistribution: atom dims differ");
    }

    int dim() const { return static_cast<int>(atoms[0].size()); }
};

/// Exact discrete optimal transport under the anisotropic ground cost
/// ||Lambda(a_i - b_j)||^p, solved as a linear program through the conic
/// solver; returns the p-th root of the optimal transport cost.
inline double discrete_wasserstein(const DiscreteDistribution& p_dist,
                                   const DiscreteDistribution& q_dist, const MetricMatrix& m,
                                   double p = 1.0) {
    p_dist.validate();
    q_dist.validate();
    require(p >= 1.0, "discrete_wasserstein: order p must be >= 1");
    require_dim(p_dist.dim() == q_dist.dim() && p_dist.dim() == m.dim(),
                "discrete_wasserstein: dimension mismatch");
    const int np = static_cast<int>(p_dist.atoms.size());
    const int nq = static_cast<int>(q_dist.atoms.size());
    const int nvars = np * nq;

    ConicProblem prob;
    prob.r.resize(nvars);
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < nq; ++j)
            prob.r[i * nq + j] = std::pow(aniso_norm(m, p_dist.atoms[i] - q_dist.atoms[j]), p);

    // Marginal equalities (the last column constraint is implied and dropped)
    // followed by the nonnegativity of the coupling.
    const int neq = np + nq - 1;
    const int mrows = neq + nvars;
    std::vector<Eigen::Triplet<double>> trips;
    prob.h = Vec::Zero(mrows);
    for (int i = 0; i < np; ++i) {
        for (int j = 0; j < nq; ++j) trips.emplace_back(i, i * nq + j, 1.0);
        prob.h[i] = p_dist.weights[i];
    }
    for (int j = 0; j + 1 < nq; ++j) {
        for (int i = 0; i < np; ++i) trips.emplace_back(np + j, i * nq + j, 1.0);
        prob.h[np + j] = q_dist.weights[j];
    }
    for (int k = 0; k < nvars; ++k) trips.emplace_back(neq + k, k, -1.0);
    prob.G.resize(mrows, nvars);
    prob.G.setFromTriplets(trips.begin(), trips.end());
    prob.cones.push_back(Cone::zero(neq));
    prob.cones.push_back(Cone::nonneg(nvars));

    ConicSolution sol = solve(prob);
    if (sol.status != SolveStatus::Optimal)
        throw SolverError(std::string("discrete_wasserstein: transport LP not solved (") +
                          to_string(sol.status) + ")");
    return std::pow(std::max(sol.objective, 0.0), 1.0 / p);
}

/// Monte Carlo estimate of the finite-sample coverage: the fraction of trials
/// where the empirical n-sample law lies within radius(m, eps) of a large
/// reference sample standing in for the truth. Trial draws depend only on
/// (seed, trial index), so coverage under different metrics can be compared
/// on identical sample paths.
inline double coverage_estimate(const DisturbanceModel& truth, const MetricMatrix& m, double eps,
                                int n, int trials, int ref_size, std::uint64_t seed,
                                double p = 1.0) {
    require(n >= 1 && trials >= 1 && ref_size >= n, "coverage_estimate: bad counts");
    RngStream ref_stream(seed, purpose::kReference, 0);
    std::vector<Vec> ref_atoms(ref_size);
    for (int i = 0; i < ref_size; ++i) ref_atoms[i] = sample_step(truth, ref_stream);
    DiscreteDistribution reference = DiscreteDistribution::uniform(ref_atoms);

    const double rad = radius(m, eps);
    int covered = 0;
    for (int trial = 0; trial < trials; ++trial) {
        RngStream stream(seed, purpose::kCoverageTrial, static_cast<std::uint64_t>(trial));
        std::vector<Vec> atoms(n);
        for (int i = 0; i < n; ++i) atoms[i] = sample_step(truth, stream);
        DiscreteDistribution emp = DiscreteDistribution::uniform(atoms);
        if (discrete_wasserstein(emp, reference, m, p) <= rad) ++covered;
    }
    return static_cast<double>(covered) / trials;
}

}  // namespace anisodrc
