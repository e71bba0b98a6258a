#include "blinkica/ica.hpp"

#include "blinkica/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace blinkica {

std::string_view to_string(IcaMethod method) {
  switch (method) {
    case IcaMethod::fastica_deflation:
      return "fastica";
    case IcaMethod::fastica_parallel:
      return "fastica_parallel";
    case IcaMethod::infomax:
      return "infomax";
  }
  return "fastica";
}

IcaMethod parse_method(std::string_view text) {
  if (text == "fastica" || text == "fastica_deflation") return IcaMethod::fastica_deflation;
  if (text == "fastica_parallel") return IcaMethod::fastica_parallel;
  if (text == "infomax") return IcaMethod::infomax;
  throw ParseError("unknown ICA algorithm '" + std::string(text) +
                   "' (expected fastica, fastica_parallel or infomax)");
}

void IcaOptions::validate() const {
  if (max_iterations && *max_iterations < 1) throw RangeError("max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw RangeError("tolerance must be > 0");
  if (learning_rate && !(*learning_rate > 0.0)) throw RangeError("learning_rate must be > 0");
  if (!(anneal_factor > 0.0 && anneal_factor <= 1.0))
    throw RangeError("anneal_factor must lie in (0, 1]");
  if (!(anneal_threshold_deg > 0.0)) throw RangeError("anneal_threshold must be > 0");
  if (!(rank_tolerance >= 0.0)) throw RangeError("rank_tolerance must be >= 0");
}

int IcaOptions::iterations_for(IcaAlgorithm algorithm) const {
  if (max_iterations) return *max_iterations;
  return algorithm == IcaAlgorithm::fastica ? 200 : 500;
}

double IcaOptions::learning_rate_for(std::size_t n_components) const {
  if (learning_rate) return *learning_rate;
  return 0.01 / std::max(std::log(static_cast<double>(n_components)), 1.0);
}

// ---------------------------------------------------------------------------

CenteredData center(const SignalMatrix& X) {
  if (X.rows() == 0 || X.cols() == 0) throw ShapeError("center: empty matrix");
  if (X.cols() < 2) throw ShapeError("center: need at least two samples");
  CenteredData out;
  out.means = X.rowwise().mean();
  out.data = X.colwise() - out.means;
  return out;
}

WhitenedData whiten(const SignalMatrix& X, double rank_tolerance) {
  if (X.rows() == 0 || X.cols() < 2) throw ShapeError("whiten: need data with >= 2 samples");
  if (!X.allFinite()) throw DegenerateInputError("whiten: non-finite input");
  const double T = static_cast<double>(X.cols());
  const Eigen::MatrixXd cov = (X * X.transpose()) / T;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw DegenerateInputError("whiten: eigensolver failed");
  const Eigen::VectorXd& vals = eig.eigenvalues();  // ascending
  const double max_val = vals.maxCoeff();
  if (!(max_val > 0.0)) throw DegenerateInputError("whiten: all-zero data");

  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = vals.size() - 1; i >= 0; --i)
    if (vals(i) > rank_tolerance * max_val) keep.push_back(i);

  const auto n = X.rows();
  const auto k = static_cast<Eigen::Index>(keep.size());
  WhitenedData out;
  out.eigenvalues.resize(k);
  out.whitener.resize(k, n);
  out.dewhitener.resize(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd v = eig.eigenvectors().col(keep[static_cast<std::size_t>(j)]);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    const double lambda = vals(keep[static_cast<std::size_t>(j)]);
    out.eigenvalues(j) = lambda;
    out.whitener.row(j) = v.transpose() / std::sqrt(lambda);
    out.dewhitener.col(j) = v * std::sqrt(lambda);
  }
  out.Z = out.whitener * X;
  return out;
}

Eigen::MatrixXd random_orthogonal(std::size_t n, Rng& rng) {
  const auto m = static_cast<Eigen::Index>(n);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd G(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) G(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < m; ++j)
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& W) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(W * W.transpose());
  const Eigen::VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose() * W;
}

namespace {

void check_whitened_input(const SignalMatrix& Z) {
  if (Z.rows() == 0) throw ShapeError("ICA: zero components");
  if (Z.cols() < 2) throw ShapeError("ICA: need at least two samples");
  if (!Z.allFinite()) throw DegenerateInputError("ICA: non-finite values in whitened data");
}

RotationFit fastica_deflation(const SignalMatrix& Z, const Eigen::MatrixXd& init, int max_iter,
                              double tol) {
  const auto k = Z.rows();
  const double T = static_cast<double>(Z.cols());
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(k, k);
  RotationFit out;
  out.converged = true;
  for (Eigen::Index p = 0; p < k; ++p) {
    Eigen::VectorXd w = init.row(p).transpose();
    if (p > 0) w -= W.topRows(p).transpose() * (W.topRows(p) * w);
    w.normalize();
    bool done = false;
    for (int it = 0; it < max_iter; ++it) {
      const Eigen::ArrayXd u = (w.transpose() * Z).transpose().array();
      const Eigen::ArrayXd g = u.tanh();
      const double gprime = (1.0 - g.square()).mean();
      Eigen::VectorXd w_new = (Z * g.matrix()) / T - gprime * w;
      if (p > 0) w_new -= W.topRows(p).transpose() * (W.topRows(p) * w_new);
      w_new.normalize();
      const double lim = std::min((w_new - w).norm(), (w_new + w).norm());
      w = w_new;
      ++out.iterations_used;
      if (lim < tol) {
        done = true;
        break;
      }
    }
    out.converged = out.converged && done;
    W.row(p) = w.transpose();
  }
  out.rotation = std::move(W);
  return out;
}

RotationFit fastica_parallel(const SignalMatrix& Z, const Eigen::MatrixXd& init, int max_iter,
                             double tol) {
  const double T = static_cast<double>(Z.cols());
  Eigen::MatrixXd W = symmetric_decorrelate(init);
  RotationFit out;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::ArrayXXd G = (W * Z).array().tanh();
    const Eigen::VectorXd gprime = (1.0 - G.square()).rowwise().mean();
    Eigen::MatrixXd W_new = (G.matrix() * Z.transpose()) / T - gprime.asDiagonal() * W;
    W_new = symmetric_decorrelate(W_new);
    const double lim = ((W_new * W.transpose()).diagonal().cwiseAbs().array() - 1.0).abs().maxCoeff();
    W = std::move(W_new);
    ++out.iterations_used;
    if (lim < tol) {
      out.converged = true;
      break;
    }
  }
  out.rotation = std::move(W);
  return out;
}

}  // namespace

RotationFit fastica(const SignalMatrix& Z, const IcaOptions& opts) {
  opts.validate();
  check_whitened_input(Z);
  Rng rng(opts.seed);
  const Eigen::MatrixXd init = random_orthogonal(static_cast<std::size_t>(Z.rows()), rng);
  const int max_iter = opts.iterations_for(IcaAlgorithm::fastica);
  return opts.mode == FastIcaMode::deflation ? fastica_deflation(Z, init, max_iter, opts.tolerance)
                                             : fastica_parallel(Z, init, max_iter, opts.tolerance);
}

RotationFit infomax(const SignalMatrix& Z, const IcaOptions& opts) {
  opts.validate();
  check_whitened_input(Z);
  constexpr double kMaxWeight = 1e8;
  constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

  const auto k = Z.rows();
  const auto T = static_cast<std::size_t>(Z.cols());
  // Column-major copy so a sample's values are contiguous for block gathers.
  const Eigen::MatrixXd Zc = Z;
  const std::size_t block =
      opts.block_size > 0
          ? std::min(opts.block_size, T)
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(T / 3.0))));
  const int max_passes = opts.iterations_for(IcaAlgorithm::infomax);
  double lrate = opts.learning_rate_for(static_cast<std::size_t>(k));

  Rng rng(opts.seed);
  Eigen::MatrixXd W = random_orthogonal(static_cast<std::size_t>(k), rng);
  const Eigen::MatrixXd BI = static_cast<double>(block) * Eigen::MatrixXd::Identity(k, k);

  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd old_W = W;
  Eigen::MatrixXd old_delta;
  double old_change = 0.0;
  Eigen::MatrixXd Zb(k, static_cast<Eigen::Index>(block));

  RotationFit out;
  for (int pass = 1; pass <= max_passes; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start + block <= T; start += block) {
      for (std::size_t j = 0; j < block; ++j)
        Zb.col(static_cast<Eigen::Index>(j)) = Zc.col(static_cast<Eigen::Index>(order[start + j]));
      const Eigen::MatrixXd U = W * Zb;
      const Eigen::MatrixXd Y = (1.0 - 2.0 / (1.0 + (-U.array()).exp())).matrix();
      W += lrate * (BI + Y * U.transpose()) * W;
    }
    if (!W.allFinite() || W.cwiseAbs().maxCoeff() > kMaxWeight)
      throw DivergenceError("infomax: weights diverged at pass " + std::to_string(pass) +
                            " with learning_rate " + std::to_string(lrate) +
                            "; retry with a smaller learning_rate");

    const Eigen::MatrixXd delta = W - old_W;
    const double change = delta.squaredNorm();
    if (pass == 1) {
      old_delta = delta;
      old_change = change;
    } else if (pass > 2 && change > 0.0 && old_change > 0.0) {
      const double cosang =
          std::clamp(delta.cwiseProduct(old_delta).sum() / std::sqrt(change * old_change), -1.0, 1.0);
      if (std::acos(cosang) * kRadToDeg > opts.anneal_threshold_deg) {
        lrate *= opts.anneal_factor;
        old_delta = delta;
        old_change = change;
      }
    }
    old_W = W;
    out.iterations_used = pass;
    if (pass > 2 && std::sqrt(change) < opts.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.rotation = symmetric_decorrelate(W);
  return out;
}

// ---------------------------------------------------------------------------

IcaModel fit(const SignalMatrix& X, std::vector<std::string> labels, IcaAlgorithm algorithm,
             const IcaOptions& opts) {
  opts.validate();
  if (X.rows() < 2) throw ShapeError("fit: need at least two measurement channels");
  if (X.cols() < X.rows())
    throw ShapeError("fit: fewer samples (" + std::to_string(X.cols()) + ") than channels (" +
                     std::to_string(X.rows()) + ")");
  if (labels.size() != static_cast<std::size_t>(X.rows()))
    throw ShapeError("fit: label count does not match channel count");

  const CenteredData centered = center(X);
  const WhitenedData white = whiten(centered.data, opts.rank_tolerance);
  RotationFit rot =
      algorithm == IcaAlgorithm::fastica ? fastica(white.Z, opts) : infomax(white.Z, opts);

  // Fix each component's sign so that its largest-magnitude sample is positive.
  const SignalMatrix S = rot.rotation * white.Z;
  for (Eigen::Index r = 0; r < S.rows(); ++r) {
    Eigen::Index arg = 0;
    S.row(r).cwiseAbs().maxCoeff(&arg);
    if (S(r, arg) < 0.0) rot.rotation.row(r) *= -1.0;
  }

  IcaModel model;
  model.means = centered.means;
  model.whitener = white.whitener;
  model.rotation = rot.rotation;
  model.W = rot.rotation * white.whitener;
  model.A_hat = white.dewhitener * rot.rotation.transpose();
  model.channel_labels = std::move(labels);
  model.n_components = static_cast<std::size_t>(white.Z.rows());
  if (algorithm == IcaAlgorithm::infomax)
    model.method = IcaMethod::infomax;
  else
    model.method = opts.mode == FastIcaMode::deflation ? IcaMethod::fastica_deflation
                                                       : IcaMethod::fastica_parallel;
  model.iterations_used = rot.iterations_used;
  model.converged = rot.converged;
  return model;
}

IcaModel fit(const Recording& rec, IcaAlgorithm algorithm, const IcaOptions& opts) {
  return fit(measurement_data(rec), measurement_labels(rec), algorithm, opts);
}

SignalMatrix sources(const IcaModel& model, const SignalMatrix& X) {
  if (X.rows() != model.means.size())
    throw ShapeError("sources: expected " + std::to_string(model.means.size()) +
                     " channels, got " + std::to_string(X.rows()));
  if (X.cols() == 0) throw ShapeError("sources: zero-sample input");
  return model.W * (X.colwise() - model.means);
}

SignalMatrix sources(const IcaModel& model, const Recording& rec) {
  if (measurement_labels(rec) != model.channel_labels)
    throw ShapeError("sources: recording channels do not match the fitted model");
  return sources(model, measurement_data(rec));
}

Recording nullify_and_reconstruct(const IcaModel& model, const Recording& rec,
                                  std::span<const std::size_t> drop) {
  for (auto d : drop)
    if (d >= model.n_components)
      throw RangeError("nullify_and_reconstruct: component " + std::to_string(d) +
                       " out of range (" + std::to_string(model.n_components) + " components)");
  SignalMatrix S = sources(model, rec);
  for (auto d : drop) S.row(static_cast<Eigen::Index>(d)).setZero();
  const SignalMatrix X = (model.A_hat * S).colwise() + model.means;

  Recording out = rec;
  const auto rows = rec.indices_with_role(ChannelRole::measurement);
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.data.row(static_cast<Eigen::Index>(rows[i])) = X.row(static_cast<Eigen::Index>(i));
  return out;
}

double permutation_scaling_distance(const Eigen::MatrixXd& W, const Eigen::MatrixXd& A) {
  if (W.cols() != A.rows() || W.rows() != A.cols())
    throw ShapeError("permutation_scaling_distance: W*A is not square");
  const Eigen::MatrixXd P = (W * A).cwiseAbs();
  const auto k = P.rows();
  if (k < 2) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double rmax = P.row(i).maxCoeff();
    const double cmax = P.col(i).maxCoeff();
    if (rmax == 0.0 || cmax == 0.0)
      throw DegenerateInputError("permutation_scaling_distance: W*A has a zero row or column");
    total += P.row(i).sum() / rmax - 1.0;
    total += P.col(i).sum() / cmax - 1.0;
  }
  return total / (2.0 * static_cast<double>(k) * static_cast<double>(k - 1));
}

}  // namespace blinkica
