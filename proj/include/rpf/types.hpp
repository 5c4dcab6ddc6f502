#pragma once

#include <Eigen/Dense>

namespace rpf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class RandomStream;

// Gaussian state estimate: mean plus symmetric positive semi-definite
// covariance.
struct GaussianBelief {
    Vector mean;
    Matrix cov;

    int dim() const { return static_cast<int>(mean.size()); }
};

bool is_symmetric(const Matrix& m, double tol = 1e-12);

// Throws std::invalid_argument if m is not square, symmetric within 1e-12,
// or has an eigenvalue below -1e-12 * trace.
void check_covariance(const Matrix& m, const char* what);
void check_belief(const GaussianBelief& b, const char* what);

// Symmetric square root via eigendecomposition; negative eigenvalues from
// rounding are clamped to zero, so any nearly-PSD input is accepted.
Matrix symmetric_sqrt(const Matrix& m);

// Solve spd * x = rhs through an LDLT factorization. Near-singular inputs
// get a 1e-12 * trace diagonal jitter before a retry.
Matrix sym_solve(const Matrix& spd, const Matrix& rhs);
Matrix sym_inverse(const Matrix& spd);

Vector sample_gaussian(const GaussianBelief& belief, RandomStream& rng);

// log N(y; mean, cov)
double gaussian_log_density(const Vector& y, const Vector& mean, const Matrix& cov);

}  // namespace rpf
