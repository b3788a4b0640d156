#include "mcal/models.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "mcal/graph.hpp"
#include "mcal/linalg.hpp"

namespace mcal {

std::string_view family_name(Family f) {
  switch (f) {
    case Family::gr: return "gr";
    case Family::logistic: return "log";
    case Family::probit: return "probit";
    case Family::mgr: return "mgr";
    case Family::ce: return "ce";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "gr") return Family::gr;
  if (name == "log" || name == "logistic") return Family::logistic;
  if (name == "probit") return Family::probit;
  if (name == "mgr") return Family::mgr;
  if (name == "ce") return Family::ce;
  throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

bool is_binary_family(Family f) {
  return f == Family::gr || f == Family::logistic || f == Family::probit;
}

void LabeledSet::add(Index node, Label label) {
  if (node < 0) throw std::invalid_argument("negative node index");
  if (!label_in_alphabet(label, n_classes_, binary_))
    throw std::invalid_argument("label " + std::to_string(label) + " outside the label alphabet");
  if (contains(node))
    throw std::invalid_argument("node " + std::to_string(node) + " is already labeled");
  if (static_cast<std::size_t>(node) >= member_.size()) member_.resize(static_cast<std::size_t>(node) + 1, 0);
  member_[static_cast<std::size_t>(node)] = 1;
  indices_.push_back(node);
  labels_.push_back(label);
}

bool LabeledSet::contains(Index node) const {
  return node >= 0 && static_cast<std::size_t>(node) < member_.size() &&
         member_[static_cast<std::size_t>(node)] != 0;
}

Eigen::MatrixXd LabeledSet::onehot() const {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Index>(size()), n_classes_);
  for (std::size_t j = 0; j < size(); ++j) y(static_cast<Index>(j), class_index(labels_[j], binary_)) = 1.0;
  return y;
}

Eigen::VectorXd LabeledSet::signs() const {
  if (!binary_) throw std::invalid_argument("binary model requires a +-1 label alphabet");
  Eigen::VectorXd y(static_cast<Index>(size()));
  for (std::size_t j = 0; j < size(); ++j) y(static_cast<Index>(j)) = labels_[j];
  return y;
}

Eigen::VectorXd ModelState::node_scores(Index k) const {
  return (spectral->vectors.row(k) * coeffs).transpose();
}

namespace {

Eigen::MatrixXd labeled_rows(const SpectralDecomposition& sd, const LabeledSet& labeled) {
  Eigen::MatrixXd rows(static_cast<Index>(labeled.size()), sd.rank());
  for (std::size_t j = 0; j < labeled.size(); ++j) {
    const Index node = labeled.indices()[j];
    if (node >= sd.num_nodes()) throw std::invalid_argument("labeled node outside the graph");
    rows.row(static_cast<Index>(j)) = sd.vectors.row(node);
  }
  return rows;
}

void require_labels(const LabeledSet& labeled) {
  if (labeled.empty()) throw std::invalid_argument("model fit requires at least one label");
}

double log_sum_exp(const Eigen::VectorXd& a) {
  const double m = a.maxCoeff();
  return m + std::log((a.array() - m).exp().sum());
}

double prior_term(const Eigen::VectorXd& lam, const Eigen::MatrixXd& coeffs) {
  return 0.5 * (coeffs.array().square().colwise() * lam.array()).sum();
}

bool acceptable_decrease(double f_new, double f_old) {
  return f_new <= f_old + 8.0 * std::numeric_limits<double>::epsilon() * std::abs(f_old);
}

}  // namespace

Eigen::VectorXd softmax(const Eigen::VectorXd& u, double gamma) {
  Eigen::ArrayXd e = (u.array() - u.maxCoeff()) / gamma;
  e = e.exp();
  return (e / e.sum()).matrix();
}

double eval_objective(const LossModel& loss, const Eigen::MatrixXd& coeffs,
                      const SpectralDecomposition& sd, const LabeledSet& labeled) {
  const Index m = sd.rank();
  const bool binary = is_binary_family(loss.family);
  if (coeffs.rows() != m || coeffs.cols() != (binary ? 1 : labeled.n_classes()))
    throw std::invalid_argument("coefficient dimensions do not match the model");
  const Eigen::VectorXd lam = sd.lambda_tau();
  double total = prior_term(lam, coeffs);
  const Eigen::MatrixXd u = labeled_rows(sd, labeled) * coeffs;  // |L| x cols
  const double g = loss.gamma;
  for (std::size_t j = 0; j < labeled.size(); ++j) {
    const Index r = static_cast<Index>(j);
    const Label y = labeled.labels()[j];
    switch (loss.family) {
      case Family::gr:
      case Family::logistic:
      case Family::probit:
        total += loss_derivatives(loss, u(r, 0), y).value;
        break;
      case Family::mgr: {
        Eigen::VectorXd res = u.row(r).transpose();
        res(class_index(y, labeled.binary())) -= 1.0;
        total += 0.5 * res.squaredNorm() / (g * g);
        break;
      }
      case Family::ce: {
        const Eigen::VectorXd ur = u.row(r).transpose();
        total += -ur(class_index(y, labeled.binary())) / g + log_sum_exp(ur / g);
        break;
      }
    }
  }
  return total;
}

Eigen::VectorXd binary_gradient(const LossModel& loss, const Eigen::VectorXd& alpha,
                                const SpectralDecomposition& sd, const LabeledSet& labeled) {
  const Eigen::MatrixXd vl = labeled_rows(sd, labeled);
  const Eigen::VectorXd u = vl * alpha;
  Eigen::VectorXd f(u.size());
  for (Index j = 0; j < u.size(); ++j)
    f(j) = loss_derivatives(loss, u(j), labeled.labels()[static_cast<std::size_t>(j)]).f;
  return sd.lambda_tau().cwiseProduct(alpha) + vl.transpose() * f;
}

Eigen::MatrixXd binary_hessian(const LossModel& loss, const Eigen::VectorXd& alpha,
                               const SpectralDecomposition& sd, const LabeledSet& labeled) {
  const Eigen::MatrixXd vl = labeled_rows(sd, labeled);
  const Eigen::VectorXd u = vl * alpha;
  Eigen::VectorXd fp(u.size());
  for (Index j = 0; j < u.size(); ++j)
    fp(j) = loss_derivatives(loss, u(j), labeled.labels()[static_cast<std::size_t>(j)]).fprime;
  Eigen::MatrixXd h = vl.transpose() * fp.asDiagonal() * vl;
  h.diagonal() += sd.lambda_tau();
  return 0.5 * (h + h.transpose());
}

Eigen::VectorXd ce_gradient(const Eigen::VectorXd& alpha, const SpectralDecomposition& sd,
                            const LabeledSet& labeled, double gamma) {
  const Index m = sd.rank();
  const int nc = labeled.n_classes();
  if (alpha.size() != m * nc) throw std::invalid_argument("stacked coefficients have wrong length");
  Eigen::Map<const Eigen::MatrixXd> a(alpha.data(), m, nc);
  const Eigen::MatrixXd vl = labeled_rows(sd, labeled);
  const Eigen::MatrixXd u = vl * a;
  Eigen::MatrixXd resid = -labeled.onehot();
  for (Index j = 0; j < u.rows(); ++j) resid.row(j) += softmax(u.row(j).transpose(), gamma).transpose();
  Eigen::MatrixXd grad = (a.array().colwise() * sd.lambda_tau().array()).matrix();
  grad += vl.transpose() * resid / gamma;
  return Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
}

Eigen::MatrixXd ce_hessian(const Eigen::VectorXd& alpha, const SpectralDecomposition& sd,
                           const LabeledSet& labeled, double gamma) {
  const Index m = sd.rank();
  const int nc = labeled.n_classes();
  if (alpha.size() != m * nc) throw std::invalid_argument("stacked coefficients have wrong length");
  Eigen::Map<const Eigen::MatrixXd> a(alpha.data(), m, nc);
  const Eigen::MatrixXd vl = labeled_rows(sd, labeled);
  const Eigen::MatrixXd u = vl * a;
  Eigen::MatrixXd pi(u.rows(), nc);
  for (Index j = 0; j < u.rows(); ++j) pi.row(j) = softmax(u.row(j).transpose(), gamma).transpose();

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m * nc, m * nc);
  const double inv_g2 = 1.0 / (gamma * gamma);
  for (int c = 0; c < nc; ++c) {
    for (int d = c; d < nc; ++d) {
      // Per-label weights B_j(c, d) = pi_c delta_cd - pi_c pi_d.
      Eigen::VectorXd w = -pi.col(c).cwiseProduct(pi.col(d));
      if (c == d) w += pi.col(c);
      Eigen::MatrixXd block = inv_g2 * (vl.transpose() * w.asDiagonal() * vl);
      h.block(c * m, d * m, m, m) = block;
      if (c != d) h.block(d * m, c * m, m, m) = block.transpose();
    }
  }
  const Eigen::VectorXd lam = sd.lambda_tau();
  for (int c = 0; c < nc; ++c) h.diagonal().segment(c * m, m) += lam;
  return 0.5 * (h + h.transpose());
}

namespace {

ModelState fit_quadratic(Family family, std::shared_ptr<const SpectralDecomposition> sd,
                         const LabeledSet& labeled, double gamma, const Eigen::MatrixXd& targets) {
  require_labels(labeled);
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const Eigen::MatrixXd vl = labeled_rows(*sd, labeled);
  const double inv_g2 = 1.0 / (gamma * gamma);
  Eigen::MatrixXd h = inv_g2 * (vl.transpose() * vl);
  h.diagonal() += sd->lambda_tau();
  ModelState st;
  st.loss = {family, gamma};
  st.covariance = spd_inverse(h);
  st.coeffs = inv_g2 * st.covariance * (vl.transpose() * targets);
  st.labeled = labeled;
  st.spectral = std::move(sd);
  return st;
}

}  // namespace

ModelState fit_gr(std::shared_ptr<const SpectralDecomposition> sd, const LabeledSet& labeled,
                  double gamma) {
  require_labels(labeled);
  ModelState st = fit_quadratic(Family::gr, sd, labeled, gamma, labeled.signs());
  st.gradient_norm = binary_gradient(st.loss, st.coeffs.col(0), *st.spectral, labeled).norm();
  return st;
}

ModelState fit_mgr(std::shared_ptr<const SpectralDecomposition> sd, const LabeledSet& labeled,
                   double gamma) {
  require_labels(labeled);
  return fit_quadratic(Family::mgr, std::move(sd), labeled, gamma, labeled.onehot());
}

namespace {

// Damped Newton on a strictly convex objective starting from zero.
template <typename Obj, typename Grad, typename Hess>
Eigen::VectorXd damped_newton(Index dim, const Obj& objective, const Grad& gradient,
                              const Hess& hessian, const NewtonOptions& opts, int& iterations,
                              double& grad_norm, std::vector<double>* trace) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  double f = objective(x);
  if (trace) trace->assign(1, f);
  for (iterations = 0;; ++iterations) {
    const Eigen::VectorXd g = gradient(x);
    grad_norm = g.norm();
    if (grad_norm <= opts.tol) return x;
    if (iterations >= opts.max_iter)
      throw ConvergenceError("Newton did not converge in " + std::to_string(opts.max_iter) +
                                 " iterations (gradient norm " + std::to_string(grad_norm) + ")",
                             grad_norm);
    Eigen::LLT<Eigen::MatrixXd> llt(hessian(x));
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("Newton: Hessian is not positive definite", grad_norm);
    const Eigen::VectorXd step = llt.solve(g);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      Eigen::VectorXd cand = x - t * step;
      const double fc = objective(cand);
      if (std::isfinite(fc) && acceptable_decrease(fc, f)) {
        x = std::move(cand);
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw ConvergenceError("Newton line search failed (gradient norm " +
                                 std::to_string(grad_norm) + ")",
                             grad_norm);
    if (trace) trace->push_back(f);
  }
}

}  // namespace

ModelState fit_newton_binary(Family family, std::shared_ptr<const SpectralDecomposition> sd,
                             const LabeledSet& labeled, double gamma, const NewtonOptions& opts,
                             std::vector<double>* objective_trace) {
  if (family != Family::logistic && family != Family::probit)
    throw std::invalid_argument("fit_newton_binary handles the logistic and probit families");
  require_labels(labeled);
  labeled.signs();  // alphabet check
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const LossModel loss{family, gamma};
  const SpectralDecomposition& s = *sd;
  ModelState st;
  st.loss = loss;
  const Eigen::VectorXd alpha = damped_newton(
      s.rank(),
      [&](const Eigen::VectorXd& a) { return eval_objective(loss, a, s, labeled); },
      [&](const Eigen::VectorXd& a) { return binary_gradient(loss, a, s, labeled); },
      [&](const Eigen::VectorXd& a) { return binary_hessian(loss, a, s, labeled); }, opts,
      st.newton_iterations, st.gradient_norm, objective_trace);
  st.coeffs = alpha;
  st.covariance = posterior_covariance_binary(loss, s, labeled, alpha);
  st.labeled = labeled;
  st.spectral = std::move(sd);
  return st;
}

ModelState fit_ce(std::shared_ptr<const SpectralDecomposition> sd, const LabeledSet& labeled,
                  double gamma, const NewtonOptions& opts, std::vector<double>* objective_trace) {
  require_labels(labeled);
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  const SpectralDecomposition& s = *sd;
  const Index m = s.rank();
  const int nc = labeled.n_classes();
  const LossModel loss{Family::ce, gamma};
  ModelState st;
  st.loss = loss;
  const Eigen::VectorXd alpha = damped_newton(
      m * nc,
      [&](const Eigen::VectorXd& a) {
        return eval_objective(loss, Eigen::Map<const Eigen::MatrixXd>(a.data(), m, nc), s, labeled);
      },
      [&](const Eigen::VectorXd& a) { return ce_gradient(a, s, labeled, gamma); },
      [&](const Eigen::VectorXd& a) { return ce_hessian(a, s, labeled, gamma); }, opts,
      st.newton_iterations, st.gradient_norm, objective_trace);
  st.coeffs = Eigen::Map<const Eigen::MatrixXd>(alpha.data(), m, nc);
  st.covariance = spd_inverse(ce_hessian(alpha, s, labeled, gamma));
  st.labeled = labeled;
  st.spectral = std::move(sd);
  return st;
}

ModelState fit_model(const LossModel& loss, std::shared_ptr<const SpectralDecomposition> sd,
                     const LabeledSet& labeled, const NewtonOptions& opts) {
  switch (loss.family) {
    case Family::gr: return fit_gr(std::move(sd), labeled, loss.gamma);
    case Family::logistic:
    case Family::probit: return fit_newton_binary(loss.family, std::move(sd), labeled, loss.gamma, opts);
    case Family::mgr: return fit_mgr(std::move(sd), labeled, loss.gamma);
    case Family::ce: return fit_ce(std::move(sd), labeled, loss.gamma, opts);
  }
  throw std::invalid_argument("unknown family");
}

Eigen::MatrixXd posterior_covariance_binary(const LossModel& loss,
                                            const SpectralDecomposition& sd,
                                            const LabeledSet& labeled,
                                            const Eigen::VectorXd& alpha_hat) {
  if (!is_binary_family(loss.family)) throw std::invalid_argument("binary family required");
  return spd_inverse(binary_hessian(loss, alpha_hat, sd, labeled));
}

Label classify(const ModelState& state, Index node) {
  const Eigen::VectorXd u = state.node_scores(node);
  if (state.binary_model()) return u(0) >= 0.0 ? 1 : -1;
  Index best = 0;
  for (Index c = 1; c < u.size(); ++c)
    if (u(c) > u(best)) best = c;
  return label_from_class(static_cast<int>(best), state.labeled.binary());
}

std::vector<Label> classify(const ModelState& state, const std::vector<Index>& nodes) {
  std::vector<Label> out;
  out.reserve(nodes.size());
  for (Index k : nodes) out.push_back(classify(state, k));
  return out;
}

}  // namespace mcal
