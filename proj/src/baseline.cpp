#include "excirec/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "excirec/exciton.hpp"
#include "excirec/rng.hpp"

namespace excirec {
namespace baseline {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

class Tracker {
 public:
  Tracker(const std::function<double(const VectorXd&)>& f, const Options& opt)
      : f_(f), opt_(opt) {}

  double eval(const VectorXd& x) {
    const double v = f_(x);
    ++evals_;
    if (v < best_) {
      best_ = v;
      best_x_ = x;
    }
    trace_.push_back(best_);
    return v;
  }

  bool target_hit() const { return best_ <= opt_.target_cost; }
  bool exhausted(int cap = -1) const {
    return evals_ >= (cap < 0 ? opt_.max_evaluations : cap);
  }
  bool stopped(int cap = -1) const { return target_hit() || exhausted(cap); }

  int evals() const { return evals_; }
  double best() const { return best_; }
  const VectorXd& best_x() const { return best_x_; }
  std::vector<double>&& take_trace() { return std::move(trace_); }

 private:
  const std::function<double(const VectorXd&)>& f_;
  const Options& opt_;
  int evals_ = 0;
  double best_ = kInf;
  VectorXd best_x_;
  std::vector<double> trace_;
};

VectorXd clamp(VectorXd x, double lo, double hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

VectorXd random_point(int dim, double lo, double hi, Rng& rng) {
  VectorXd x(dim);
  for (int d = 0; d < dim; ++d) x[d] = rng.uniform(lo, hi);
  return x;
}

// One simplex run from the given center; returns when the target or the
// evaluation cap is reached, or when the simplex has collapsed.
void run_simplex(Tracker& t, const VectorXd& center, double step, double lo,
                 double hi, int cap) {
  const int dim = static_cast<int>(center.size());
  std::vector<VectorXd> v;
  std::vector<double> fv;
  v.push_back(clamp(center, lo, hi));
  for (int d = 0; d < dim; ++d) {
    VectorXd p = center;
    p[d] += step;
    v.push_back(clamp(p, lo, hi));
  }
  for (auto& p : v) {
    if (t.stopped(cap)) return;
    fv.push_back(t.eval(p));
  }

  std::vector<int> idx(v.size());
  while (!t.stopped(cap)) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = idx.front(), worst = idx.back();
    const int second_worst = idx[idx.size() - 2];

    double diameter = 0.0;
    for (int d = 1; d <= dim; ++d)
      diameter = std::max(diameter, (v[idx[d]] - v[best]).norm());
    const double spread = fv[worst] - fv[best];
    if (diameter < 1e-11 && spread < 1e-14 * (1.0 + std::abs(fv[best])))
      return;  // collapsed; the caller may restart

    VectorXd centroid = VectorXd::Zero(dim);
    for (size_t k = 0; k < idx.size(); ++k)
      if (static_cast<int>(k) != static_cast<int>(idx.size()) - 1)
        centroid += v[idx[k]];
    centroid /= dim;

    const VectorXd xr = clamp(centroid + (centroid - v[worst]), lo, hi);
    const double fr = t.eval(xr);
    if (t.stopped(cap)) return;

    if (fr < fv[best]) {
      const VectorXd xe = clamp(centroid + 2.0 * (centroid - v[worst]), lo, hi);
      const double fe = t.eval(xe);
      if (fe < fr) {
        v[worst] = xe;
        fv[worst] = fe;
      } else {
        v[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second_worst]) {
      v[worst] = xr;
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      const VectorXd xc =
          outside ? clamp(centroid + 0.5 * (xr - centroid), lo, hi)
                  : clamp(centroid - 0.5 * (centroid - v[worst]), lo, hi);
      const double fc = t.eval(xc);
      if (t.stopped(cap)) return;
      if (fc < std::min(fr, fv[worst])) {
        v[worst] = xc;
        fv[worst] = fc;
      } else {
        // Shrink toward the best vertex.
        for (size_t k = 0; k < v.size(); ++k) {
          if (static_cast<int>(k) == best) continue;
          v[k] = clamp(v[best] + 0.5 * (v[k] - v[best]), lo, hi);
          if (t.stopped(cap)) return;
          fv[k] = t.eval(v[k]);
        }
      }
    }
  }
}

void nelder_mead(Tracker& t, Rng& rng, const Options& opt, int cap = -1) {
  const int max_restarts = 1;
  for (int attempt = 0; attempt <= max_restarts; ++attempt) {
    if (t.stopped(cap)) return;
    const VectorXd center =
        random_point(opt.dim, opt.lower, opt.upper, rng);
    run_simplex(t, center, 0.1, opt.lower, opt.upper,
                cap < 0 ? opt.max_evaluations : cap);
  }
}

// Final simplex refinement of the best point found by a global phase. The
// global engines cannot reach tight absolute targets on these budgets by
// themselves, mirroring how stock DE packages end with a local polish.
void polish_from_best(Tracker& t, const Options& opt) {
  if (t.stopped() || t.best_x().size() == 0) return;
  run_simplex(t, t.best_x(), 0.1, opt.lower, opt.upper, opt.max_evaluations);
  if (!t.stopped())
    run_simplex(t, t.best_x(), 0.01, opt.lower, opt.upper,
                opt.max_evaluations);
}

void differential_evolution(Tracker& t, Rng& rng, const Options& opt) {
  const int pop = std::max(4, 15 * opt.dim);
  // The global phase keeps a share of the budget for the final polish.
  const int cap = std::max(pop, (opt.max_evaluations * 3) / 5);
  const double F = 0.8, CR = 0.9;

  std::vector<VectorXd> x;
  std::vector<double> fx;
  for (int i = 0; i < pop && !t.stopped(cap); ++i) {
    x.push_back(random_point(opt.dim, opt.lower, opt.upper, rng));
    fx.push_back(t.eval(x.back()));
  }

  int stall = 0;
  double last_best = t.best();
  while (!t.stopped(cap) && stall < 4) {
    for (size_t i = 0; i < x.size() && !t.stopped(cap); ++i) {
      int r0, r1, r2;
      do r0 = static_cast<int>(rng.below(x.size()));
      while (r0 == static_cast<int>(i));
      do r1 = static_cast<int>(rng.below(x.size()));
      while (r1 == static_cast<int>(i) || r1 == r0);
      do r2 = static_cast<int>(rng.below(x.size()));
      while (r2 == static_cast<int>(i) || r2 == r0 || r2 == r1);

      VectorXd trial = x[i];
      const VectorXd mutant =
          clamp(x[r0] + F * (x[r1] - x[r2]), opt.lower, opt.upper);
      const int j_rand = static_cast<int>(rng.below(opt.dim));
      for (int j = 0; j < opt.dim; ++j)
        if (j == j_rand || rng.uniform() < CR) trial[j] = mutant[j];

      const double ft = t.eval(trial);
      if (ft < fx[i]) {
        x[i] = trial;
        fx[i] = ft;
      }
    }
    if (t.best() < last_best - 1e-16) {
      stall = 0;
      last_best = t.best();
    } else {
      ++stall;
    }
  }
  polish_from_best(t, opt);
}

// Gaussian process on log-warped costs: squared-exponential kernel with
// per-dimension length scales, hyperparameters by marginal-likelihood
// ascent, candidates ranked by expected improvement.
class Surrogate {
 public:
  Surrogate(int dim, double lo, double hi) : dim_(dim), lo_(lo), hi_(hi) {
    log_ell_ = VectorXd::Constant(dim, std::log(0.3 * (hi - lo)));
    log_sf_ = 0.0;
    log_sn_ = std::log(1e-3);
  }

  void add(const VectorXd& x, double y) {
    xs_.push_back(x);
    ys_.push_back(std::log10(y + 1e-12));
  }

  size_t size() const { return xs_.size(); }

  void fit(int ascent_steps) {
    prune();
    const int n = static_cast<int>(xs_.size());
    X_.resize(n, dim_);
    for (int i = 0; i < n; ++i) X_.row(i) = xs_[i].transpose();
    VectorXd raw(n);
    for (int i = 0; i < n; ++i) raw[i] = ys_[i];
    mean_ = raw.mean();
    std_ = std::sqrt((raw.array() - mean_).square().sum() / n);
    if (std_ < 1e-12) std_ = 1.0;
    y_ = (raw.array() - mean_) / std_;

    sq_diff_.assign(dim_, MatrixXd(n, n));
    for (int d = 0; d < dim_; ++d)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double diff = X_(i, d) - X_(j, d);
          sq_diff_[d](i, j) = diff * diff;
        }

    double lml = refresh();
    double lr = 0.1;
    for (int it = 0; it < ascent_steps; ++it) {
      VectorXd g = lml_gradient();
      const VectorXd ell0 = log_ell_;
      const double sf0 = log_sf_, sn0 = log_sn_;
      bool accepted = false;
      for (int half = 0; half < 4; ++half) {
        log_ell_ = ell0 + lr * g.head(dim_);
        log_sf_ = sf0 + lr * g[dim_];
        log_sn_ = sn0 + lr * g[dim_ + 1];
        clamp_hypers();
        const double next = refresh();
        if (next > lml) {
          lml = next;
          lr *= 1.3;
          accepted = true;
          break;
        }
        lr *= 0.25;
      }
      if (!accepted) {
        log_ell_ = ell0;
        log_sf_ = sf0;
        log_sn_ = sn0;
        refresh();
        break;
      }
    }
  }

  // Expected improvement over the incumbent for each candidate row.
  VectorXd expected_improvement(const MatrixXd& cand) const {
    const int m = static_cast<int>(cand.rows());
    const int n = static_cast<int>(X_.rows());
    const double sf2 = std::exp(2.0 * log_sf_);
    MatrixXd ks(n, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int d = 0; d < dim_; ++d) {
          const double diff = (X_(i, d) - cand(j, d)) /
                              std::exp(log_ell_[d]);
          s += diff * diff;
        }
        ks(i, j) = sf2 * std::exp(-0.5 * s);
      }
    const MatrixXd v = llt_.matrixL().solve(ks);
    const VectorXd mu = ks.transpose() * alpha_;
    const double fbest = y_.minCoeff();
    VectorXd ei(m);
    for (int j = 0; j < m; ++j) {
      const double var =
          std::max(1e-12, sf2 + std::exp(2.0 * log_sn_) -
                              v.col(j).squaredNorm());
      const double sigma = std::sqrt(var);
      const double z = (fbest - mu[j]) / sigma;
      const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
      const double Phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
      ei[j] = (fbest - mu[j]) * Phi + sigma * phi;
    }
    return ei;
  }

 private:
  void clamp_hypers() {
    const double range = hi_ - lo_;
    for (int d = 0; d < dim_; ++d)
      log_ell_[d] = std::clamp(log_ell_[d], std::log(1e-3 * range),
                               std::log(10.0 * range));
    log_sf_ = std::clamp(log_sf_, std::log(1e-3), std::log(1e3));
    log_sn_ = std::clamp(log_sn_, std::log(1e-6), std::log(1.0));
  }

  void prune() {
    const size_t cap = 240;
    if (xs_.size() <= cap) return;
    // Keep the lowest costs plus the most recent evaluations.
    std::vector<size_t> idx(xs_.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return ys_[a] < ys_[b]; });
    std::vector<char> keep(xs_.size(), 0);
    for (size_t k = 0; k < cap / 2; ++k) keep[idx[k]] = 1;
    for (size_t k = xs_.size() - cap / 2; k < xs_.size(); ++k) keep[k] = 1;
    std::vector<VectorXd> nx;
    std::vector<double> ny;
    for (size_t k = 0; k < xs_.size(); ++k)
      if (keep[k]) {
        nx.push_back(xs_[k]);
        ny.push_back(ys_[k]);
      }
    xs_.swap(nx);
    ys_.swap(ny);
  }

  MatrixXd kernel() const {
    const int n = static_cast<int>(X_.rows());
    MatrixXd k = MatrixXd::Zero(n, n);
    for (int d = 0; d < dim_; ++d)
      k += sq_diff_[d] / std::exp(2.0 * log_ell_[d]);
    k = std::exp(2.0 * log_sf_) * (-0.5 * k).array().exp().matrix();
    k.diagonal().array() += std::exp(2.0 * log_sn_) + 1e-10;
    return k;
  }

  double refresh() {
    const int n = static_cast<int>(X_.rows());
    MatrixXd k = kernel();
    llt_.compute(k);
    if (llt_.info() != Eigen::Success) {
      k.diagonal().array() += 1e-6;
      llt_.compute(k);
    }
    alpha_ = llt_.solve(y_);
    double log_det = 0.0;
    for (int i = 0; i < n; ++i)
      log_det += std::log(llt_.matrixL()(i, i));
    return -0.5 * y_.dot(alpha_) - log_det -
           0.5 * n * std::log(2.0 * M_PI);
  }

  VectorXd lml_gradient() const {
    const int n = static_cast<int>(X_.rows());
    const MatrixXd kinv = llt_.solve(MatrixXd::Identity(n, n));
    const MatrixXd w = alpha_ * alpha_.transpose() - kinv;
    MatrixXd kse = kernel();
    kse.diagonal().array() -= std::exp(2.0 * log_sn_) + 1e-10;
    VectorXd g(dim_ + 2);
    for (int d = 0; d < dim_; ++d) {
      const MatrixXd dk =
          kse.cwiseProduct(sq_diff_[d]) / std::exp(2.0 * log_ell_[d]);
      g[d] = 0.5 * w.cwiseProduct(dk).sum();
    }
    g[dim_] = w.cwiseProduct(kse).sum();
    g[dim_ + 1] = std::exp(2.0 * log_sn_) * w.trace();
    return g;
  }

  int dim_;
  double lo_, hi_;
  std::vector<VectorXd> xs_;
  std::vector<double> ys_;
  MatrixXd X_;
  VectorXd y_;
  double mean_ = 0.0, std_ = 1.0;
  std::vector<MatrixXd> sq_diff_;
  VectorXd log_ell_;
  double log_sf_, log_sn_;
  Eigen::LLT<MatrixXd> llt_;
  VectorXd alpha_;
};

void gp_surrogate(Tracker& t, Rng& rng, const Options& opt) {
  Surrogate gp(opt.dim, opt.lower, opt.upper);

  const int n_init = std::min(2 * (opt.dim + 1), opt.max_evaluations);
  for (int i = 0; i < n_init && !t.stopped(); ++i) {
    const VectorXd x = random_point(opt.dim, opt.lower, opt.upper, rng);
    gp.add(x, t.eval(x));
  }

  // The exploitation cloud around the incumbent contracts when progress
  // stalls, so the acquisition can resolve ever finer scales; a new basin
  // (incumbent jumping farther than the current cloud) resets the scale.
  const double range = opt.upper - opt.lower;
  double spread = 0.05 * range;
  const double spread_floor = 1e-7 * range;
  int stalled = 0;
  double last_best = t.best();
  VectorXd last_x = t.best_x();

  int since_fit = 0;
  bool fitted = false;
  while (!t.stopped()) {
    if (!fitted || since_fit >= 8) {
      gp.fit(12);
      fitted = true;
      since_fit = 0;
    }
    // Acquisition multistart: uniform exploration plus a cloud around the
    // incumbent for exploitation.
    const int n_uniform = 512, n_local = 256;
    MatrixXd cand(n_uniform + n_local, opt.dim);
    for (int i = 0; i < n_uniform; ++i)
      cand.row(i) = random_point(opt.dim, opt.lower, opt.upper, rng).transpose();
    for (int i = 0; i < n_local; ++i) {
      VectorXd p = t.best_x();
      for (int d = 0; d < opt.dim; ++d) p[d] += spread * rng.gaussian();
      cand.row(n_uniform + i) = clamp(p, opt.lower, opt.upper).transpose();
    }
    const VectorXd ei = gp.expected_improvement(cand);
    int pick = 0;
    ei.maxCoeff(&pick);
    const VectorXd x = cand.row(pick).transpose();
    gp.add(x, t.eval(x));
    ++since_fit;

    if (t.best() < last_best - 1e-18) {
      if ((t.best_x() - last_x).norm() > 3.0 * spread)
        spread = 0.05 * range;
      stalled = 0;
      last_best = t.best();
      last_x = t.best_x();
    } else if (++stalled >= 12) {
      spread = std::max(0.3 * spread, spread_floor);
      stalled = 0;
    }
  }
}

}  // namespace

double cost(const Eigen::VectorXd& candidate, const BaselineProblem& problem) {
  if (candidate.size() != static_cast<Eigen::Index>(problem.geometry.size()))
    throw invalid_input("candidate length does not match the geometry");
  if ((candidate.array() < problem.lower).any() ||
      (candidate.array() > problem.upper).any())
    throw invalid_input("candidate violates the coefficient bounds");
  const double norm = candidate.norm();
  if (norm <= 1e-12) throw invalid_input("degenerate zero candidate");
  if (problem.target.size() != problem.scan.n_tip())
    throw invalid_input("target length does not match the scan");
  const Eigen::MatrixXd f = field_projection(problem.geometry, problem.scan);
  const Eigen::VectorXd spectrum =
      (f * (candidate / norm)).array().square();
  return (spectrum - problem.target).squaredNorm() / problem.target.size();
}

Result minimize_function(const std::function<double(const VectorXd&)>& f,
                         Method method, const Options& options) {
  if (options.dim < 1) throw config_error("optimizer dimension must be >= 1");
  if (!(options.lower < options.upper))
    throw config_error("optimizer bounds must satisfy lower < upper");
  if (options.max_evaluations < 1)
    throw config_error("max_evaluations must be >= 1");
  if (options.target_cost < 0.0)
    throw config_error("target_cost must be >= 0");

  Tracker t(f, options);
  Rng rng(options.seed);
  switch (method) {
    case Method::nelder_mead: nelder_mead(t, rng, options); break;
    case Method::differential_evolution:
      differential_evolution(t, rng, options);
      break;
    case Method::gp_surrogate: gp_surrogate(t, rng, options); break;
  }

  Result r;
  r.candidate = t.best_x();
  r.best_cost = t.best();
  r.iterations = t.evals();
  r.converged = t.target_hit();
  r.trace = t.take_trace();
  return r;
}

Result minimize(const BaselineProblem& problem, Method method,
                std::uint64_t seed) {
  if (problem.max_iterations < 1)
    throw config_error("max_iterations must be >= 1");
  if (!(problem.lower < problem.upper))
    throw config_error("bounds must satisfy lower < upper");
  if (problem.target.size() != problem.scan.n_tip())
    throw invalid_input("target length does not match the scan");
  const int dim = static_cast<int>(problem.geometry.size());

  const Eigen::MatrixXd f = field_projection(problem.geometry, problem.scan);
  const auto objective = [&](const VectorXd& x) -> double {
    const double norm = x.norm();
    if (norm <= 1e-12) return 1e30;  // degenerate candidate, steer away
    const VectorXd spectrum = (f * (x / norm)).array().square();
    return (spectrum - problem.target).squaredNorm() / problem.target.size();
  };

  Options opt;
  opt.dim = dim;
  opt.lower = problem.lower;
  opt.upper = problem.upper;
  opt.max_evaluations = problem.max_iterations;
  opt.target_cost = problem.target_cost;
  opt.seed = seed;

  Result r = minimize_function(objective, method, opt);
  if (r.candidate.size() == dim && r.candidate.norm() > 1e-12)
    r.candidate = canonicalize_sign(r.candidate / r.candidate.norm());
  return r;
}

}  // namespace baseline
}  // namespace excirec
