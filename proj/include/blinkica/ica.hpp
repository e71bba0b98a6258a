#pragma once

#include "blinkica/recording.hpp"
#include "blinkica/signal_core.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blinkica {

enum class IcaAlgorithm { fastica, infomax };
enum class FastIcaMode { deflation, parallel };

// Tag recorded on a fitted model.
enum class IcaMethod { fastica_deflation, fastica_parallel, infomax };

std::string_view to_string(IcaMethod method);
IcaMethod parse_method(std::string_view text);  // throws ParseError

struct IcaOptions {
  FastIcaMode mode = FastIcaMode::deflation;
  // Unset means the algorithm default: 200 fixed-point steps per component
  // for FastICA, 500 passes over the data for Infomax.
  std::optional<int> max_iterations;
  double tolerance = 1e-4;
  // Unset means 0.01 / ln(n_components), with ln clamped below at 1.
  std::optional<double> learning_rate;
  double anneal_factor = 0.9;
  double anneal_threshold_deg = 60.0;
  // Infomax mini-block length; 0 picks floor(sqrt(samples / 3)).
  std::size_t block_size = 0;
  double rank_tolerance = 1e-10;
  std::uint64_t seed = 42;

  void validate() const;
  int iterations_for(IcaAlgorithm algorithm) const;
  double learning_rate_for(std::size_t n_components) const;
};

// Ground truth x = A s for synthetic data.
struct MixingModel {
  Eigen::MatrixXd A;  // channels x sources
  SignalMatrix s;     // sources x samples
  SignalMatrix x;     // channels x samples
};

struct IcaModel {
  Eigen::VectorXd means;     // per input channel
  Eigen::MatrixXd whitener;  // n_components x channels
  Eigen::MatrixXd rotation;  // n_components x n_components, orthogonal
  Eigen::MatrixXd W;         // rotation * whitener
  Eigen::MatrixXd A_hat;     // channels x n_components, pseudo-inverse of W
  std::vector<std::string> channel_labels;
  std::size_t n_components = 0;
  IcaMethod method = IcaMethod::fastica_deflation;
  int iterations_used = 0;
  bool converged = false;
};

struct CenteredData {
  SignalMatrix data;
  Eigen::VectorXd means;
};

struct WhitenedData {
  SignalMatrix Z;              // n_components x samples
  Eigen::MatrixXd whitener;    // n_components x channels
  Eigen::MatrixXd dewhitener;  // channels x n_components, whitener's pseudo-inverse
  Eigen::VectorXd eigenvalues; // retained, descending
};

struct RotationFit {
  Eigen::MatrixXd rotation;
  int iterations_used = 0;
  bool converged = false;
};

CenteredData center(const SignalMatrix& X);

/// PCA whitening. Eigenvalues of the (1/T) covariance below
/// rank_tolerance * max are dropped, which reduces the component count.
WhitenedData whiten(const SignalMatrix& X, double rank_tolerance = 1e-10);

/// Fixed-point ICA with the log-cosh contrast. In deflation mode
/// iterations_used is the total over all components.
RotationFit fastica(const SignalMatrix& Z, const IcaOptions& opts);

/// Natural-gradient Infomax with logistic nonlinearity; iterations_used is
/// the number of passes over the data.
RotationFit infomax(const SignalMatrix& Z, const IcaOptions& opts);

/// Random orthogonal n x n matrix (QR of a Gaussian draw, sign-fixed diagonal).
Eigen::MatrixXd random_orthogonal(std::size_t n, Rng& rng);

/// Symmetric orthogonalisation (W W^T)^{-1/2} W.
Eigen::MatrixXd symmetric_decorrelate(const Eigen::MatrixXd& W);

/// center -> whiten -> rotation on the measurement-role channels only.
IcaModel fit(const Recording& rec, IcaAlgorithm algorithm, const IcaOptions& opts = {});
IcaModel fit(const SignalMatrix& X, std::vector<std::string> labels, IcaAlgorithm algorithm,
             const IcaOptions& opts = {});

/// s = W (x - means) over the model's channels.
SignalMatrix sources(const IcaModel& model, const Recording& rec);
SignalMatrix sources(const IcaModel& model, const SignalMatrix& X);

/// Zeroes the listed components and remixes through A_hat. Channels that
/// did not enter the decomposition are copied through untouched.
Recording nullify_and_reconstruct(const IcaModel& model, const Recording& rec,
                                  std::span<const std::size_t> drop);

/// Amari-style index of P = W A, normalised to [0, 1]; zero iff P is a
/// scaled permutation.
double permutation_scaling_distance(const Eigen::MatrixXd& W, const Eigen::MatrixXd& A);

}  // namespace blinkica
