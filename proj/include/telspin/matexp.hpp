#pragma once

#include <Eigen/Dense>

namespace telspin {

// Matrix exponential e^(a*t).  Uses an eigendecomposition when the
// eigenvector basis is well conditioned (condition < 1e6), otherwise falls
// back to scaling-and-squaring on a degree-13 Pade approximant.  Target
// accuracy ~1e-12 relative for the matrix sizes used here.
Eigen::MatrixXcd mat_exp(const Eigen::MatrixXcd& a, double t = 1.0);

}  // namespace telspin
