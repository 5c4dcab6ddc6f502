#include "rpf/types.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rpf/rng.hpp"

namespace rpf {

bool is_symmetric(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

void check_covariance(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument(std::string(what) + ": covariance must be square");
    }
    if (!is_symmetric(m)) {
        throw std::invalid_argument(std::string(what) + ": covariance not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    const double floor = -1e-12 * std::max(1.0, m.trace());
    if (eig.eigenvalues().minCoeff() < floor) {
        throw std::invalid_argument(std::string(what) +
                                    ": covariance not positive semi-definite");
    }
}

void check_belief(const GaussianBelief& b, const char* what) {
    check_covariance(b.cov, what);
    if (b.mean.size() != b.cov.rows()) {
        throw std::invalid_argument(std::string(what) +
                                    ": mean/covariance dimensions disagree");
    }
    if (!b.mean.allFinite()) {
        throw std::invalid_argument(std::string(what) + ": mean not finite");
    }
}

Matrix symmetric_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
    Vector lambda = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix sym_solve(const Matrix& spd, const Matrix& rhs) {
    Eigen::LDLT<Matrix> ldlt(spd);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        return ldlt.solve(rhs);
    }
    const double jitter = 1e-12 * std::max(1.0, spd.trace());
    Matrix fixed = spd + jitter * Matrix::Identity(spd.rows(), spd.cols());
    return fixed.ldlt().solve(rhs);
}

Matrix sym_inverse(const Matrix& spd) {
    return sym_solve(spd, Matrix::Identity(spd.rows(), spd.cols()));
}

Vector sample_gaussian(const GaussianBelief& belief, RandomStream& rng) {
    const int d = belief.dim();
    Vector z(d);
    for (int i = 0; i < d; ++i) z[i] = rng.gaussian();
    return belief.mean + symmetric_sqrt(belief.cov) * z;
}

double gaussian_log_density(const Vector& y, const Vector& mean, const Matrix& cov) {
    const int d = static_cast<int>(y.size());
    Eigen::LDLT<Matrix> ldlt(cov);
    const Vector resid = y - mean;
    const double quad = resid.dot(ldlt.solve(resid));
    const double logdet = ldlt.vectorD().array().log().sum();
    return -0.5 * (d * std::log(2.0 * M_PI) + logdet + quad);
}

}  // namespace rpf
