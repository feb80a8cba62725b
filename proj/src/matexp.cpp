#include "telspin/matexp.hpp"

#include <cmath>
#include <stdexcept>

namespace telspin {

namespace {

// Degree-13 Pade scaling-and-squaring, the standard backward-stable scheme.
Eigen::MatrixXcd exp_pade13(const Eigen::MatrixXcd& m) {
  static const double b[] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double norm1 = m.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > theta13)
    s = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Eigen::MatrixXcd a = m / std::pow(2.0, s);
  const int n = static_cast<int>(a.rows());
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);

  const Eigen::MatrixXcd a2 = a * a;
  const Eigen::MatrixXcd a4 = a2 * a2;
  const Eigen::MatrixXcd a6 = a4 * a2;
  const Eigen::MatrixXcd u =
      a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
           b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Eigen::MatrixXcd v =
      a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
      b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

  Eigen::MatrixXcd r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < s; ++i) r = r * r;
  return r;
}

}  // namespace

Eigen::MatrixXcd mat_exp(const Eigen::MatrixXcd& a, double t) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("mat_exp: matrix must be square");
  if (!a.allFinite() || !std::isfinite(t))
    throw std::invalid_argument("mat_exp: non-finite input");

  const Eigen::MatrixXcd m = a * t;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m);
  if (es.info() == Eigen::Success) {
    const Eigen::MatrixXcd& vec = es.eigenvectors();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(vec);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin > 0.0 && smax / smin < 1e6) {
      Eigen::VectorXcd ev = es.eigenvalues().array().exp();
      return vec * ev.asDiagonal() * vec.inverse();
    }
  }
  return exp_pade13(m);
}

}  // namespace telspin
