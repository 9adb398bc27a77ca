#include "opera/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace opera {

SpectralModel::SpectralModel(const PairwiseKernel& k, const DiscreteMeasure& meas)
    : kernel_(k), meas_(meas), m_(meas.size()) {
  const int n = m_ * m_;
  if (n > kGridCap) throw config_error("spectral model: grid cap m^2 <= 2500 exceeded");

  w_.resize(n);
  for (int a = 0; a < m_; ++a)
    for (int b = 0; b < m_; ++b) w_[grid_index(a, b)] = meas.probs()[a] * meas.probs()[b];

  kmat_.resize(n, n);
  if (k.is_induced()) {
    // every grid kernel value is a 4-term combination of the support Gram
    const Eigen::MatrixXd g = gram(k.base(), meas.support());
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b) {
        const int i = grid_index(a, b);
        for (int c = 0; c < m_; ++c)
          for (int d = 0; d < m_; ++d) {
            const int j = grid_index(c, d);
            if (j > i) continue;
            const double v = g(a, c) + g(b, d) - g(a, d) - g(b, c);
            kmat_(i, j) = v;
            kmat_(j, i) = v;
          }
      }
  } else {
    for (int i = 0; i < n; ++i) {
      const PairPoint pi = grid_pair(i);
      for (int j = 0; j <= i; ++j) {
        const double v = k(pi, grid_pair(j));
        kmat_(i, j) = v;
        kmat_(j, i) = v;
      }
    }
  }

  const Eigen::VectorXd sqw = w_.cwiseSqrt();
  const Eigen::MatrixXd b = sqw.asDiagonal() * kmat_ * sqw.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  if (es.info() != Eigen::Success) throw std::runtime_error("spectral model: eigensolver failed");

  lambda_.resize(n);
  phi_.resize(n, n);
  const Eigen::VectorXd inv_sqw = sqw.cwiseInverse();
  for (int i = 0; i < n; ++i) {
    const int src = n - 1 - i;  // descending order
    lambda_[i] = es.eigenvalues()[src];
    phi_.col(i) = inv_sqw.asDiagonal() * es.eigenvectors().col(src);
  }
  const double lmax = std::max(lambda_[0], 0.0);
  for (int i = 0; i < n; ++i) lambda_[i] = std::max(lambda_[i], 0.0);
  null_tol_ = 1e-12 * std::max(lmax, 1e-300);
  rank_ = 0;
  while (rank_ < n && lambda_[rank_] > null_tol_) ++rank_;
}

PairPoint SpectralModel::grid_pair(int idx) const {
  return {meas_.support()[static_cast<std::size_t>(idx / m_)],
          meas_.support()[static_cast<std::size_t>(idx % m_)]};
}

double SpectralModel::rho_norm(const Eigen::VectorXd& g) const {
  return std::sqrt(std::max(g.dot(w_.cwiseProduct(g)), 0.0));
}

double SpectralModel::rho_inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  return f.dot(w_.cwiseProduct(g));
}

Eigen::VectorXd SpectralModel::eigen_coords(const Eigen::VectorXd& g) const {
  return phi_.transpose() * w_.cwiseProduct(g);
}

Eigen::VectorXd SpectralModel::from_eigen_coords(const Eigen::VectorXd& c) const { return phi_ * c; }

Eigen::VectorXd SpectralModel::apply(const Eigen::VectorXd& g) const {
  return phi_ * lambda_.cwiseProduct(eigen_coords(g));
}

Eigen::VectorXd SpectralModel::apply_direct(const Eigen::VectorXd& g) const {
  return kmat_ * w_.cwiseProduct(g);
}

Eigen::VectorXd SpectralModel::fractional_apply(double beta, const Eigen::VectorXd& g) const {
  if (!(beta > 0.0)) throw input_error("fractional_apply: beta must be positive");
  Eigen::VectorXd c = eigen_coords(g);
  for (int i = 0; i < c.size(); ++i)
    c[i] = (lambda_[i] > null_tol_) ? std::pow(lambda_[i], beta) * c[i] : 0.0;
  return phi_ * c;
}

double SpectralModel::weighted_diagonal() const { return w_.dot(kmat_.diagonal()); }

Eigen::VectorXd SpectralModel::target_grid() const {
  Eigen::VectorXd f(grid_size());
  for (int a = 0; a < m_; ++a)
    for (int b = 0; b < m_; ++b)
      f[grid_index(a, b)] = meas_.f_rho_values()[a] - meas_.f_rho_values()[b];
  return f;
}

KFunctionalResult k_functional_detail(const SpectralModel& model, const Eigen::VectorXd& f, double s) {
  if (!(s > 0.0)) throw input_error("k_functional: s must be positive");
  if (f.size() != model.grid_size()) throw input_error("k_functional: grid size mismatch");

  const Eigen::VectorXd coords = model.eigen_coords(f);
  const int r = model.rank();
  const Eigen::VectorXd a = coords.head(r);
  const Eigen::VectorXd lam = model.eigenvalues().head(r);
  // residual outside the grid RKHS (null directions of L_K)
  double res_sq = coords.size() > r ? coords.tail(coords.size() - r).squaredNorm() : 0.0;
  res_sq = std::max(res_sq, 0.0);
  const double f_norm = std::sqrt(a.squaredNorm() + res_sq);

  KFunctionalResult out;
  if (r == 0) {
    out.value = f_norm;
    out.tau = std::numeric_limits<double>::infinity();
    return out;
  }

  auto norm_k = [&](double tau) {
    double acc = 0.0;
    for (int k = 0; k < r; ++k) {
      const double q = lam[k] / (lam[k] + tau);
      acc += a[k] * a[k] * q * q / lam[k];
    }
    return std::sqrt(std::max(acc, 0.0));
  };
  auto dist_rho = [&](double tau) {
    double acc = res_sq;
    for (int k = 0; k < r; ++k) {
      const double q = tau / (lam[k] + tau);
      acc += a[k] * a[k] * q * q;
    }
    return std::sqrt(std::max(acc, 0.0));
  };
  auto value_at = [&](double tau) { return dist_rho(tau) + s * norm_k(tau); };
  auto stationarity = [&](double tau) { return tau * norm_k(tau) - s * dist_rho(tau); };

  const double lmax = lam[0];
  const double lmin = lam[r - 1];
  double best_tau = 0.0;
  double best_val = value_at(0.0);  // b = a: exact fit, penalty s||f_range||_K

  // bracket a sign change of the first-order condition on a log grid
  const double lo = lmin * 1e-12, hi = lmax * 1e12;
  double prev_tau = lo, prev_psi = stationarity(lo);
  const int n_scan = 240;
  for (int i = 1; i <= n_scan; ++i) {
    const double tau = lo * std::pow(hi / lo, static_cast<double>(i) / n_scan);
    const double psi = stationarity(tau);
    if (prev_psi <= 0.0 && psi >= 0.0) {
      double tl = prev_tau, th = tau;
      for (int it = 0; it < 200 && (th - tl) > 1e-14 * th; ++it) {
        const double tm = 0.5 * (tl + th);
        if (stationarity(tm) <= 0.0)
          tl = tm;
        else
          th = tm;
      }
      const double tau_star = 0.5 * (tl + th);
      const double v = value_at(tau_star);
      if (v < best_val) {
        best_val = v;
        best_tau = tau_star;
      }
    }
    // the scan doubles as a safety net against missed brackets
    const double v = value_at(tau);
    if (v < best_val) {
      best_val = v;
      best_tau = tau;
    }
    prev_tau = tau;
    prev_psi = psi;
  }

  // b = 0 end: value ||f||_rho
  if (f_norm < best_val) {
    best_val = f_norm;
    best_tau = std::numeric_limits<double>::infinity();
  }

  out.value = best_val;
  out.tau = best_tau;
  if (std::isfinite(best_tau) && best_tau > 0.0)
    out.stationarity_residual = std::abs(stationarity(best_tau)) / (1.0 + f_norm);
  return out;
}

double k_functional(const SpectralModel& model, const Eigen::VectorXd& f, double s) {
  return k_functional_detail(model, f, s).value;
}

RegularTarget construct_regular_target(const SpectralModel& model, double beta, double norm_target,
                                       RngStream& rng) {
  if (!(beta > 0.0)) throw input_error("construct_regular_target: beta must be positive");
  if (!(norm_target > 0.0)) throw input_error("construct_regular_target: norm_target must be positive");
  if (!model.kernel().is_induced())
    throw input_error("construct_regular_target: needs an induced kernel (separable range)");
  const int r = model.rank();
  if (r == 0) throw input_error("construct_regular_target: all eigenvalues are zero");

  const int n = model.grid_size();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < r; ++k) c[k] = rng.normal();
  c.head(r) *= norm_target / c.head(r).norm();

  Eigen::VectorXd fc = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < r; ++k) fc[k] = std::pow(model.eigenvalues()[k], beta) * c[k];

  RegularTarget out;
  out.grid_values = model.from_eigen_coords(fc);

  // recompute the source norm from the grid values rather than trusting c
  const Eigen::VectorXd coords = model.eigen_coords(out.grid_values);
  double acc = 0.0;
  for (int k = 0; k < r; ++k) {
    const double g = coords[k] / std::pow(model.eigenvalues()[k], beta);
    acc += g * g;
  }
  out.source_norm = std::sqrt(acc);

  const int m = model.support_size();
  out.f_rho_values.resize(m);
  for (int a = 0; a < m; ++a) out.f_rho_values[a] = out.grid_values[model.grid_index(a, 0)];
  return out;
}

bool is_two_thirds(double theta) { return std::abs(theta - 2.0 / 3.0) < 1e-12; }

BoundConstants constants(double theta, double mu, double kappa, double M, double beta) {
  if (!(theta > 0.5 && theta < 1.0)) throw input_error("constants: theta must lie in (1/2, 1)");
  if (!(mu > 0.0) || !(kappa > 0.0) || !(M > 0.0)) throw input_error("constants: mu, kappa, M must be positive");
  const double m1t = mu * (1.0 - theta);
  const double ratio = std::max(1.0 / std::sqrt(m1t), std::sqrt(m1t));

  BoundConstants out;
  if (is_two_thirds(theta)) {
    out.c_theta = 20.0 * ratio / m1t + std::sqrt(5.0 / (2.0 * mu));
    out.c_theta_tilde =
        std::sqrt(5.0 / (8.0 * mu) + 16.0 * std::max(1.0 / m1t, m1t) / (mu * mu * (1.0 - theta)));
  } else {
    const double den = std::abs(3.0 * theta - 2.0);
    out.c_theta = 26.0 * ratio / (m1t * den) + std::sqrt(5.0 / (2.0 * mu));
    out.c_theta_tilde =
        std::sqrt(5.0 / (8.0 * mu) + 16.0 * std::max(1.0 / m1t, m1t) / (mu * mu * (1.0 - theta) * den));
  }
  out.c_theta_kappa =
      4.0 * (3.0 * out.c_theta + 16.0 * out.c_theta_tilde / 3.0) * kappa * (1.0 + kappa) * (1.0 + kappa) * M;
  if (beta > 0.0) {
    out.d_kappa_beta = (std::pow(beta / M_E, beta) + std::pow(kappa, 2.0 * beta)) *
                       std::pow(kappa, 2.0 * beta) * std::pow(mu * (1.0 - beta), beta) *
                       std::pow(1.0 - std::pow(0.5, 1.0 - theta), -beta);
  }
  return out;
}

double theorem1_s(double theta, double mu, double kappa, int T) {
  return std::sqrt(6.0 * mu) * (1.0 + kappa) * std::pow(static_cast<double>(T), -(1.0 - theta) / 2.0);
}

double theorem1_bound(double theta, double mu, double kappa, double M, int T, double delta,
                      double kfunc_value) {
  if (T < 2) throw input_error("theorem1_bound: T must be >= 2");
  if (!(delta > 0.0 && delta < 1.0)) throw input_error("theorem1_bound: delta must lie in (0,1)");
  const BoundConstants c = constants(theta, mu, kappa, M, 0.0);
  const double expo = std::min(theta - 0.5, (1.0 - theta) / 2.0);
  return kfunc_value + c.c_theta_kappa * std::pow(static_cast<double>(T), -expo) *
                           std::log(static_cast<double>(T)) * std::log(8.0 * T / delta);
}

}  // namespace opera
