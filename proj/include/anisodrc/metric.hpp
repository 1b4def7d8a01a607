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

/// The anisotropy metric: a symmetric matrix with eigenvalues confined to
/// [eig_lo, eig_hi], 0 < eig_lo. Immutable; the eigendecomposition, inverse
/// and top eigenvector are fixed at construction so that downstream
/// subgradient selections are deterministic.
class MetricMatrix {
  public:
    MetricMatrix(Mat lambda, double eig_lo, double eig_hi)
        : lambda_(std::move(lambda)), eig_lo_(eig_lo), eig_hi_(eig_hi) {
        require(eig_lo_ > 0.0 && eig_hi_ >= eig_lo_, "MetricMatrix: invalid eigenvalue bounds");
        require_dim(lambda_.rows() == lambda_.cols(), "MetricMatrix: must be square");
        const double scale = std::max(1.0, lambda_.cwiseAbs().maxCoeff());
        require((lambda_ - lambda_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                "MetricMatrix: not symmetric");
        Eigen::SelfAdjointEigenSolver<Mat> es(lambda_);
        require(es.info() == Eigen::Success, "MetricMatrix: eigendecomposition failed");
        eigenvalues_ = es.eigenvalues();
        eigenvectors_ = es.eigenvectors();
        require(eigenvalues_.minCoeff() >= eig_lo_ - 1e-9 &&
                    eigenvalues_.maxCoeff() <= eig_hi_ + 1e-9,
                "MetricMatrix: eigenvalues outside [eig_lo, eig_hi]");
        inverse_ = eigenvectors_ * eigenvalues_.cwiseInverse().asDiagonal() *
                   eigenvectors_.transpose();
        sigma_max_ = eigenvalues_.maxCoeff();
        // Unit top eigenvector: the lowest-index eigenvector attaining the
        // largest eigenvalue in the solver's (ascending) ordering.
        int idx = 0;
        for (int i = 0; i < eigenvalues_.size(); ++i) {
            if (eigenvalues_[i] >= sigma_max_ - 1e-12 * std::max(1.0, sigma_max_)) {
                idx = i;
                break;
            }
        }
        top_eigvec_ = eigenvectors_.col(idx);
    }

    static MetricMatrix identity(int d, double eig_lo = 1e-8,
                                 double eig_hi = std::numeric_limits<double>::infinity()) {
        return MetricMatrix(Mat::Identity(d, d), eig_lo, eig_hi);
    }

    int dim() const { return static_cast<int>(lambda_.rows()); }
    const Mat& lambda() const { return lambda_; }
    const Mat& inverse() const { return inverse_; }
    const Vec& eigenvalues() const { return eigenvalues_; }
    double sigma_max() const { return sigma_max_; }
    const Vec& top_eigvec() const { return top_eigvec_; }
    double eig_lo() const { return eig_lo_; }
    double eig_hi() const { return eig_hi_; }

  private:
    Mat lambda_;
    double eig_lo_, eig_hi_;
    Vec eigenvalues_;
    Mat eigenvectors_;
    Mat inverse_;
    double sigma_max_ = 0.0;
    Vec top_eigvec_;
};

/// ||Lambda z||.
inline double aniso_norm(const MetricMatrix& m, const Vec& z) {
    require_dim(z.size() == m.dim(), "aniso_norm: dimension mismatch");
    return (m.lambda() * z).norm();
}

/// Rescaled ambiguity radius sigma_max(Lambda) * eps.
inline double radius(const MetricMatrix& m, double eps) {
    require(eps >= 0.0, "radius: eps must be >= 0");
    return m.sigma_max() * eps;
}

/// Frobenius projection onto the symmetric eigenvalue-box set: symmetrize,
/// clamp eigenvalues, reassemble.
inline MetricMatrix project_metric(const Mat& cand, double eig_lo, double eig_hi) {
    require_dim(cand.rows() == cand.cols(), "project_metric: input must be square");
    Mat sym = 0.5 * (cand + cand.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    require(es.info() == Eigen::Success, "project_metric: eigendecomposition failed");
    Vec ev = es.eigenvalues().cwiseMax(eig_lo).cwiseMin(eig_hi);
    Mat proj = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    // Exact symmetry despite floating-point reassembly.
    proj = 0.5 * (proj + proj.transpose());
    return MetricMatrix(proj, eig_lo, eig_hi);
}

}  // namespace anisodrc
