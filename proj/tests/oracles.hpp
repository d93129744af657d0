#pragma once

// Independent reference constructions for the tests: dense operators built
// from 1D stencils with Kronecker products, never through the library's
// matrix-free code.

#include <Eigen/Dense>

#include <cmath>

namespace oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// 1D Neumann second difference on n cells of width h.
inline Mat neumann_1d(int n, double h) {
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    a(i, i) -= 1;
    a(i + 1, i + 1) -= 1;
    a(i, i + 1) += 1;
    a(i + 1, i) += 1;
  }
  return a / (h * h);
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

/// 2D Neumann Laplacian for storage index j * nx + i.
inline Mat laplacian(int nx, int ny, double hx, double hy) {
  return kron(Mat::Identity(ny, ny), neumann_1d(nx, hx)) +
         kron(neumann_1d(ny, hy), Mat::Identity(nx, nx));
}

struct CoupledSolution {
  Vec z;
  double r;
};

/// One theta-scheme step (theta = 1/2 with the (3 Z - Z_prev) / 2 predictor,
/// theta = 1 with Z itself) from the full (N + 1)-unknown system for
/// (Z1, R1) with W eliminated. The double well is written out by hand.
inline CoupledSolution coupled_step(int nx, int ny, double hx, double hy,
                                    const Vec& z0, const Vec& z_prev, double r0,
                                    double dt, double eps, double beta,
                                    double mob, bool conserved, double theta) {
  const int n = nx * ny;
  const double h2 = hx * hy;
  const Mat lap = laplacian(nx, ny, hx, hy);
  const Mat I = Mat::Identity(n, n);
  const Mat L = beta / (eps * eps) * I - lap;
  const Mat G = conserved ? lap : Mat(-I);

  const Vec zt = theta < 1 ? Vec(1.5 * z0 - 0.5 * z_prev) : z0;
  Vec fp(n);
  double e1 = 0;
  for (int k = 0; k < n; ++k) {
    const double q = zt[k] * zt[k] - 1 - beta;
    fp[k] = zt[k] * q / (eps * eps);
    e1 += h2 * q * q / (4 * eps * eps);
  }
  const Vec b = fp / std::sqrt(e1);

  Mat A = Mat::Zero(n + 1, n + 1);
  Vec rhs(n + 1);
  A.topLeftCorner(n, n) = I / dt - theta * mob * G * L;
  A.topRightCorner(n, 1) = -theta * mob * G * b;
  rhs.head(n) = z0 / dt + (1 - theta) * mob * G * (L * z0 + r0 * b);
  A.bottomLeftCorner(1, n) = -0.5 * h2 * b.transpose();
  A(n, n) = 1;
  rhs[n] = r0 - 0.5 * h2 * b.dot(z0);
  const Vec x = A.partialPivLu().solve(rhs);
  return {x.head(n), x[n]};
}

}  // namespace oracle
