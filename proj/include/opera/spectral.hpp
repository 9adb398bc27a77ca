#ifndef OPERA_SPECTRAL_HPP
#define OPERA_SPECTRAL_HPP

#include <Eigen/Dense>

#include "opera/measure.hpp"

namespace opera {

// Exact finite-dimensional realization of the integral operator L_K on the
// grid of ordered support pairs of a discrete measure. L^2_rho(X^2) becomes
// R^(m^2) with the w-weighted inner product, w_(a,b) = p_a p_b, and L_K is
// the w-weighted kernel matrix, diagonalized once at construction.
class SpectralModel {
 public:
  static constexpr int kGridCap = 2500;

  SpectralModel(const PairwiseKernel& k, const DiscreteMeasure& meas);

  int support_size() const { return m_; }
  int grid_size() const { return m_ * m_; }
  int grid_index(int a, int b) const { return a * m_ + b; }
  PairPoint grid_pair(int idx) const;
  const DiscreteMeasure& measure() const { return meas_; }
  const PairwiseKernel& kernel() const { return kernel_; }

  const Eigen::VectorXd& weights() const { return w_; }
  const Eigen::VectorXd& eigenvalues() const { return lambda_; }  // descending, clamped at 0
  double max_eigenvalue() const { return lambda_.size() ? lambda_[0] : 0.0; }
  int rank() const { return rank_; }
  double null_tolerance() const { return null_tol_; }

  double rho_norm(const Eigen::VectorXd& g) const;
  double rho_inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;

  Eigen::VectorXd apply(const Eigen::VectorXd& g) const;         // spectral route
  Eigen::VectorXd apply_direct(const Eigen::VectorXd& g) const;  // weighted kernel summation route
  Eigen::VectorXd fractional_apply(double beta, const Eigen::VectorXd& g) const;

  Eigen::VectorXd eigen_coords(const Eigen::VectorXd& g) const;       // <g, phi_k>_w
  Eigen::VectorXd from_eigen_coords(const Eigen::VectorXd& c) const;  // sum c_k phi_k

  // sum of w_i K(grid_i, grid_i); equals the trace of the weighted operator.
  double weighted_diagonal() const;

  // Evaluate the pairwise target of the measure on the grid.
  Eigen::VectorXd target_grid() const;

 private:
  PairwiseKernel kernel_;
  DiscreteMeasure meas_;
  int m_;
  Eigen::VectorXd w_;
  Eigen::MatrixXd kmat_;    // grid kernel matrix
  Eigen::VectorXd lambda_;  // descending
  Eigen::MatrixXd phi_;     // w-orthonormal eigenvector columns
  int rank_ = 0;
  double null_tol_ = 0.0;
};

struct KFunctionalResult {
  double value = 0.0;
  double tau = 0.0;                    // stationarity parameter of the minimizer, 0 or inf at the ends
  double stationarity_residual = 0.0;  // |tau N - s Delta| at the reported tau, scaled
};

// K(s, f) = inf over the grid RKHS of ||h - f||_rho + s ||h||_K. Stationarity
// gives eigencoordinates b_k = a_k lambda_k/(lambda_k + tau); tau found by
// scalar root-finding and cross-checked against the closed ends b = a, b = 0.
KFunctionalResult k_functional_detail(const SpectralModel& model, const Eigen::VectorXd& f, double s);
double k_functional(const SpectralModel& model, const Eigen::VectorXd& f, double s);

struct RegularTarget {
  Eigen::VectorXd grid_values;   // f_tilde on the grid, inside the range of L_K^beta
  double source_norm = 0.0;      // ||L_K^{-beta} f_tilde||_rho, recomputed independently
  Eigen::VectorXd f_rho_values;  // anchored univariate values f_tilde(u_a, u_1)
};

RegularTarget construct_regular_target(const SpectralModel& model, double beta, double norm_target,
                                       RngStream& rng);

struct BoundConstants {
  double c_theta = 0.0;
  double c_theta_tilde = 0.0;
  double c_theta_kappa = 0.0;
  double d_kappa_beta = 0.0;
};

BoundConstants constants(double theta, double mu, double kappa, double M, double beta);

// Argument of the K-functional in the convergence bound.
double theorem1_s(double theta, double mu, double kappa, int T);

double theorem1_bound(double theta, double mu, double kappa, double M, int T, double delta,
                      double kfunc_value);

bool is_two_thirds(double theta);

}  // namespace opera

#endif  // OPERA_SPECTRAL_HPP
