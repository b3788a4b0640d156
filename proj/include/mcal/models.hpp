#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mcal/common.hpp"
#include "mcal/spectral.hpp"

namespace mcal {

enum class Family { gr, logistic, probit, mgr, ce };

std::string_view family_name(Family f);
// Accepts "gr", "log"/"logistic", "probit", "mgr", "ce".
Family parse_family(std::string_view name);
bool is_binary_family(Family f);

struct LossModel {
  Family family = Family::gr;
  double gamma = 0.5;
};

// Labeled nodes and their observed labels. Labels follow the dataset alphabet
// ({+1,-1} when `binary`, otherwise 1..n_classes).
class LabeledSet {
 public:
  LabeledSet() = default;
  LabeledSet(int n_classes, bool binary) : n_classes_(n_classes), binary_(binary) {}

  // Throws std::invalid_argument on a duplicate index or a label outside the alphabet.
  void add(Index node, Label label);
  bool contains(Index node) const;

  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  const std::vector<Index>& indices() const { return indices_; }
  const std::vector<Label>& labels() const { return labels_; }
  int n_classes() const { return n_classes_; }
  bool binary() const { return binary_; }

  // |L| x n_classes one-hot rows.
  Eigen::MatrixXd onehot() const;
  // Binary labels as a +-1 vector (requires a binary alphabet).
  Eigen::VectorXd signs() const;

 private:
  std::vector<Index> indices_;
  std::vector<Label> labels_;
  std::vector<char> member_;  // grows on demand
  int n_classes_ = 2;
  bool binary_ = true;
};

struct NewtonOptions {
  double tol = 1e-8;
  int max_iter = 100;
};

// A fitted model. `coeffs` is M x 1 for binary families and M x n_c for MGR and CE; for CE
// its column-major storage is exactly the stacked coefficient vector of length M n_c.
// `covariance` is M x M (binary, MGR shared across classes) or M n_c x M n_c (CE).
struct ModelState {
  LossModel loss;
  Eigen::MatrixXd coeffs;
  Eigen::MatrixXd covariance;
  LabeledSet labeled;
  std::shared_ptr<const SpectralDecomposition> spectral;
  int newton_iterations = 0;
  double gradient_norm = 0.0;

  int n_classes() const { return labeled.n_classes(); }
  bool binary_model() const { return is_binary_family(loss.family); }
  Eigen::Map<const Eigen::VectorXd> stacked() const {
    return {coeffs.data(), coeffs.size()};
  }
  // u_k = row k of V times coeffs (length 1 for binary families, n_c otherwise).
  Eigen::VectorXd node_scores(Index k) const;
};

// Loss value and its first two partial derivatives in the first argument.
struct LossDerivatives {
  double value;
  double f;        // d loss / dx
  double fprime;   // d^2 loss / dx^2
};
LossDerivatives loss_derivatives(const LossModel& loss, double x, Label y);

// Gaussian probit helpers (psi_gamma is the N(0, gamma^2) density).
double log_normal_cdf(double z);
// phi(z) / Phi(z), finite for all z.
double normal_hazard_ratio(double z);

// Truncated objective at the given coefficients (M x 1, M x n_c).
double eval_objective(const LossModel& loss, const Eigen::MatrixXd& coeffs,
                      const SpectralDecomposition& sd, const LabeledSet& labeled);

// Gradient and Hessian of the binary truncated objective.
Eigen::VectorXd binary_gradient(const LossModel& loss, const Eigen::VectorXd& alpha,
                                const SpectralDecomposition& sd, const LabeledSet& labeled);
Eigen::MatrixXd binary_hessian(const LossModel& loss, const Eigen::VectorXd& alpha,
                               const SpectralDecomposition& sd, const LabeledSet& labeled);

// Cross-entropy gradient (length M n_c, stacked) and Hessian (M n_c square) at the stacked
// coefficients, assembled from the labeled rows of V only.
Eigen::VectorXd ce_gradient(const Eigen::VectorXd& alpha, const SpectralDecomposition& sd,
                            const LabeledSet& labeled, double gamma);
Eigen::MatrixXd ce_hessian(const Eigen::VectorXd& alpha, const SpectralDecomposition& sd,
                           const LabeledSet& labeled, double gamma);
// Row-wise softmax of u / gamma for a single score vector.
Eigen::VectorXd softmax(const Eigen::VectorXd& u, double gamma);

// Closed-form quadratic fits. fit_gr handles the binary GR model; fit_mgr one-hot MGR.
ModelState fit_gr(std::shared_ptr<const SpectralDecomposition> sd, const LabeledSet& labeled,
                  double gamma);
ModelState fit_mgr(std::shared_ptr<const SpectralDecomposition> sd, const LabeledSet& labeled,
                   double gamma);

// Damped Newton from zero. Throws ConvergenceError carrying the last gradient norm.
ModelState fit_newton_binary(Family family, std::shared_ptr<const SpectralDecomposition> sd,
                             const LabeledSet& labeled, double gamma,
                             const NewtonOptions& opts = {},
                             std::vector<double>* objective_trace = nullptr);
ModelState fit_ce(std::shared_ptr<const SpectralDecomposition> sd, const LabeledSet& labeled,
                  double gamma, const NewtonOptions& opts = {},
                  std::vector<double>* objective_trace = nullptr);

// Dispatches on the family.
ModelState fit_model(const LossModel& loss, std::shared_ptr<const SpectralDecomposition> sd,
                     const LabeledSet& labeled, const NewtonOptions& opts = {});

// Laplace covariance (Lambda_tau + V^T diag(F'') V)^{-1} of a binary model.
Eigen::MatrixXd posterior_covariance_binary(const LossModel& loss,
                                            const SpectralDecomposition& sd,
                                            const LabeledSet& labeled,
                                            const Eigen::VectorXd& alpha_hat);

// Predicted labels in the dataset alphabet. Binary: sign with sgn(0) = +1. Multiclass:
// argmax with ties to the lowest class.
Label classify(const ModelState& state, Index node);
std::vector<Label> classify(const ModelState& state, const std::vector<Index>& nodes);

// Binary blob checkpoint: magic, version, family, gamma, labeled set, coeffs, covariance.
std::string serialize_model(const ModelState& state);
ModelState deserialize_model(std::string_view blob,
                             std::shared_ptr<const SpectralDecomposition> sd);

}  // namespace mcal
