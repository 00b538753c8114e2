#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "hetreg/errors.hpp"
#include "hetreg/learners.hpp"

namespace hetreg {

namespace {

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajorMatrix>;

// Penalized negative log-likelihood: sum_i [log(1+e^{z_i}) - y_i z_i] + w'w/(2c).
double logistic_loss(const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w, double c) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double zi = z[i];
    double log1pe = zi > 0.0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
    loss += log1pe - y[i] * zi;
  }
  return loss + w.squaredNorm() / (2.0 * c);
}

}  // namespace

Model fit_logistic(const Matrix& X, const std::vector<std::uint8_t>& y,
                   const LogisticOptions& opts) {
  std::size_t n = X.rows;
  std::size_t d = X.cols;
  if (n == 0 || y.size() != n) throw ConfigError("logistic fit: bad input sizes");
  if (!(opts.c > 0.0)) throw ConfigError("logistic fit: c must be > 0");

  ConstMap Xm(X.data.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::VectorXd yv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) yv[static_cast<Eigen::Index>(i)] = y[i];

  // theta = (w_1..w_d, b).  Start from w = 0 with the intercept at the
  // log-odds of the target mean (clipped for one-class targets).
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) + 1);
  double ybar = yv.mean();
  double clipped = std::min(1.0 - 1e-6, std::max(1e-6, ybar));
  theta[static_cast<Eigen::Index>(d)] = std::log(clipped / (1.0 - clipped));

  double inv_c = 1.0 / opts.c;
  Eigen::VectorXd z(static_cast<Eigen::Index>(n)), p(static_cast<Eigen::Index>(n));

  auto compute_z = [&](const Eigen::VectorXd& th) {
    return (Xm * th.head(static_cast<Eigen::Index>(d))).array() + th[static_cast<Eigen::Index>(d)];
  };

  z = compute_z(theta);
  double loss = logistic_loss(z, yv, theta.head(static_cast<Eigen::Index>(d)), opts.c);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) p[i] = sigmoid(z[i]);

    Eigen::VectorXd grad(static_cast<Eigen::Index>(d) + 1);
    grad.head(static_cast<Eigen::Index>(d)) =
        Xm.transpose() * (p - yv) + inv_c * theta.head(static_cast<Eigen::Index>(d));
    grad[static_cast<Eigen::Index>(d)] = (p - yv).sum();
    if (grad.lpNorm<Eigen::Infinity>() < opts.tol) break;

    Eigen::VectorXd s = (p.array() * (1.0 - p.array())).matrix();
    Eigen::MatrixXd hess(static_cast<Eigen::Index>(d) + 1, static_cast<Eigen::Index>(d) + 1);
    hess.topLeftCorner(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) =
        Xm.transpose() * s.asDiagonal() * Xm;
    hess.topLeftCorner(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))
        .diagonal().array() += inv_c;
    Eigen::VectorXd cross = Xm.transpose() * s;
    hess.topRightCorner(static_cast<Eigen::Index>(d), 1) = cross;
    hess.bottomLeftCorner(1, static_cast<Eigen::Index>(d)) = cross.transpose();
    hess(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) = s.sum();

    // Guard near-singular Hessians (saturated probabilities) with a ridge.
    Eigen::VectorXd step;
    double jitter = 0.0;
    for (;;) {
      Eigen::MatrixXd h = hess;
      if (jitter > 0.0) h.diagonal().array() += jitter;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      step = ldlt.solve(grad);
      if (ldlt.info() == Eigen::Success && step.allFinite()) break;
      jitter = jitter == 0.0 ? 1e-10 : jitter * 100.0;
      if (jitter > 1.0) throw ComputeError("logistic fit: Hessian solve failed");
    }

    // Backtracking: halve until the penalized loss stops increasing.
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      Eigen::VectorXd candidate = theta - scale * step;
      Eigen::VectorXd zc = compute_z(candidate);
      double candidate_loss =
          logistic_loss(zc, yv, candidate.head(static_cast<Eigen::Index>(d)), opts.c);
      if (candidate_loss <= loss) {
        theta = candidate;
        z = zc;
        loss = candidate_loss;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;  // stalled; gradient check already said "not converged enough"
  }

  Model m;
  m.kind = ModelKind::logistic;
  m.n_features = d;
  m.hyperparameters = {{"c", opts.c}, {"tol", opts.tol},
                       {"max_iter", static_cast<double>(opts.max_iter)}};
  LinearModel lin;
  lin.weights.assign(theta.data(), theta.data() + d);
  lin.intercept = theta[static_cast<Eigen::Index>(d)];
  lin.logistic_link = true;
  m.impl = std::move(lin);
  return m;
}

Model fit_ridge(const Matrix& X, const std::vector<double>& y, const RidgeOptions& opts) {
  std::size_t n = X.rows;
  std::size_t d = X.cols;
  if (n == 0 || y.size() != n) throw ConfigError("ridge fit: bad input sizes");
  if (opts.alpha < 0.0) throw ConfigError("ridge fit: alpha must be >= 0");

  ConstMap Xm(X.data.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));

  // Augmented design [X, 1]; the penalty skips the intercept coordinate.
  Eigen::Index dim = static_cast<Eigen::Index>(d) + 1;
  Eigen::MatrixXd a(dim, dim);
  a.topLeftCorner(dim - 1, dim - 1) = Xm.transpose() * Xm;
  a.topLeftCorner(dim - 1, dim - 1).diagonal().array() += opts.alpha;
  Eigen::VectorXd col_sums = Xm.colwise().sum();
  a.topRightCorner(dim - 1, 1) = col_sums;
  a.bottomLeftCorner(1, dim - 1) = col_sums.transpose();
  a(dim - 1, dim - 1) = static_cast<double>(n);

  Eigen::VectorXd rhs(dim);
  rhs.head(dim - 1) = Xm.transpose() * yv;
  rhs[dim - 1] = yv.sum();

  if (opts.alpha == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() < dim) {
      throw ComputeError(
          "ridge fit: normal equations are singular with alpha = 0; set alpha > 0");
    }
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  Eigen::VectorXd theta = ldlt.solve(rhs);
  // One round of iterative refinement tightens the residual well below the
  // documented 1e-8 bound on reasonably scaled problems.
  theta += ldlt.solve(rhs - a * theta);
  if (!theta.allFinite()) throw ComputeError("ridge fit: solve produced non-finite values");

  Model m;
  m.kind = ModelKind::ridge;
  m.n_features = d;
  m.hyperparameters = {{"alpha", opts.alpha}};
  LinearModel lin;
  lin.weights.assign(theta.data(), theta.data() + d);
  lin.intercept = theta[dim - 1];
  lin.logistic_link = false;
  m.impl = std::move(lin);
  return m;
}

}  // namespace hetreg
