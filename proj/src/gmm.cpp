#include "xclick/gmm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "xclick/error.hpp"

namespace xclick {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

double log_sum_exp(const double* values, std::size_t count, std::size_t stride) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < count; ++k) hi = std::max(hi, values[k * stride]);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (std::size_t k = 0; k < count; ++k) sum += std::exp(values[k * stride] - hi);
  return hi + std::log(sum);
}

// Uniform index in [0, n) from raw engine output (rejection, no modulo bias).
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return static_cast<std::size_t>(v % range);
}

double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Eigen::Matrix3d apply_floor(const Eigen::Matrix3d& scatter, double eps, CovarianceFloor mode) {
  const Eigen::Matrix3d sym = 0.5 * (scatter + scatter.transpose());
  if (mode == CovarianceFloor::AddIdentity) return sym + eps * Eigen::Matrix3d::Identity();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(sym);
  const Eigen::Vector3d clipped = solver.eigenvalues().cwiseMax(eps);
  const Eigen::Matrix3d& v = solver.eigenvectors();
  Eigen::Matrix3d out = v * clipped.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

void check_options(const GmmOptions& o) {
  if (o.components < 1) throw Error(ErrorCode::InvalidArgument, "GMM needs K >= 1");
  if (!(o.covariance_floor > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "covariance floor must be positive");
  }
  if (o.em_iterations < 0) throw Error(ErrorCode::InvalidArgument, "negative EM iterations");
}

// Weighted M-step from responsibilities (component-major, K*n).
GmmModel m_step(const ColorSamples& x, const std::vector<double>& resp, std::size_t k_count,
                const GmmModel* previous, const GmmOptions& o) {
  const std::size_t n = x.size();
  std::vector<GaussianComponent> comps(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double* rk = resp.data() + k * n;
    double nk = 0.0;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      nk += rk[i];
      sum += rk[i] * x.at(i);
    }
    GaussianComponent& c = comps[k];
    c.weight = nk / static_cast<double>(n);
    if (nk <= 0.0) {
      // Dead component: keep its shape, it carries no mass.
      if (previous) {
        c.mean = previous->components()[k].mean;
        c.covariance = previous->components()[k].covariance;
      } else {
        c.covariance = o.covariance_floor * Eigen::Matrix3d::Identity();
      }
      continue;
    }
    c.mean = sum / nk;
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d d = x.at(i) - c.mean;
      scatter.noalias() += rk[i] * d * d.transpose();
    }
    c.covariance = apply_floor(scatter / nk, o.covariance_floor, o.floor_mode);
  }
  return GmmModel(std::move(comps));
}

// Returns total log-likelihood; fills responsibilities.
double e_step(const GmmModel& model, const ColorSamples& x, std::vector<double>& resp) {
  const std::size_t n = x.size();
  const std::size_t k_count = model.size();
  resp.resize(k_count * n);
  model.component_log_densities(x, resp);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lse = log_sum_exp(resp.data() + i, k_count, n);
    total += lse;
    for (std::size_t k = 0; k < k_count; ++k) {
      double& v = resp[k * n + i];
      v = std::exp(v - lse);
    }
  }
  return total;
}

GmmFit run_em(GmmModel model, const ColorSamples& x, const GmmOptions& o) {
  GmmFit fit;
  std::vector<double> resp;
  double ll = e_step(model, x, resp);
  fit.log_likelihood.push_back(ll);
  for (int it = 0; it < o.em_iterations; ++it) {
    model = m_step(x, resp, model.size(), &model, o);
    ll = e_step(model, x, resp);
    fit.log_likelihood.push_back(ll);
  }
  fit.model = std::move(model);
  return fit;
}

}  // namespace

GmmModel::GmmModel(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw Error(ErrorCode::InvalidArgument, "GMM needs >= 1 component");
  cached_.reserve(components_.size());
  for (const auto& c : components_) {
    Eigen::LLT<Eigen::Matrix3d> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::InvalidArgument, "GMM covariance is not positive definite");
    }
    const Eigen::Matrix3d lower = llt.matrixL();
    const Eigen::Matrix3d inv = lower.triangularView<Eigen::Lower>().solve(
        Eigen::Matrix3d::Identity());
    Cached cache{};
    cache.params = {inv(0, 0), inv(1, 0), inv(1, 1), inv(2, 0), inv(2, 1), inv(2, 2),
                    {c.mean[0], c.mean[1], c.mean[2]}};
    const double log_det = 2.0 * (std::log(lower(0, 0)) + std::log(lower(1, 1)) +
                                  std::log(lower(2, 2)));
    cache.log_scale = (c.weight > 0.0 ? std::log(c.weight)
                                      : -std::numeric_limits<double>::infinity()) -
                      0.5 * (3.0 * kLog2Pi + log_det);
    cached_.push_back(cache);
  }
}

void GmmModel::component_log_densities(const ColorSamples& samples, std::span<double> out) const {
  const std::size_t n = samples.size();
  if (out.size() != n * components_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "component_log_densities: output size");
  }
  const auto& k = kernels::active();
  for (std::size_t c = 0; c < components_.size(); ++c) {
    double* row = out.data() + c * n;
    k.mahalanobis_sq(samples.r.data(), samples.g.data(), samples.b.data(), n, cached_[c].params,
                     row);
    const double scale = cached_[c].log_scale;
    for (std::size_t i = 0; i < n; ++i) row[i] = scale - 0.5 * row[i];
  }
}

void GmmModel::neg_log_likelihood(const ColorSamples& samples, std::span<double> out) const {
  const std::size_t n = samples.size();
  if (out.size() != n) throw Error(ErrorCode::DimensionMismatch, "neg_log_likelihood: output size");
  std::vector<double> dens(n * components_.size());
  component_log_densities(samples, dens);
  for (std::size_t i = 0; i < n; ++i) out[i] = -log_sum_exp(dens.data() + i, components_.size(), n);
}

double GmmModel::neg_log_likelihood(const Eigen::Vector3d& rgb) const {
  ColorSamples one;
  one.push_back(rgb[0], rgb[1], rgb[2]);
  double out = 0.0;
  neg_log_likelihood(one, std::span<double>(&out, 1));
  return out;
}

double GmmModel::total_log_likelihood(const ColorSamples& samples) const {
  std::vector<double> nll(samples.size());
  neg_log_likelihood(samples, nll);
  double total = 0.0;
  for (double v : nll) total -= v;
  return total;
}

GmmFit fit_gmm(const ColorSamples& x, const GmmOptions& o) {
  check_options(o);
  if (x.empty()) throw Error(ErrorCode::InvalidArgument, "fit_gmm: no samples");
  const std::size_t n = x.size();
  const std::size_t k_count = static_cast<std::size_t>(o.components);

  // k-means++ seeding.
  std::mt19937_64 rng(o.seed);
  std::vector<Eigen::Vector3d> centers;
  centers.push_back(x.at(uniform_index(rng, n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (centers.size() < k_count) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x.at(i) - centers.back()).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform_unit(rng) * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, n);
    }
    centers.push_back(x.at(pick));
  }

  // Hard assignment to the nearest center; exact ties share the sample.
  std::vector<double> resp(k_count * n, 0.0);
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d xi = x.at(i);
    double best = std::numeric_limits<double>::infinity();
    tied.clear();
    for (std::size_t k = 0; k < k_count; ++k) {
      const double d = (xi - centers[k]).squaredNorm();
      if (d < best) {
        best = d;
        tied.assign(1, k);
      } else if (d == best) {
        tied.push_back(k);
      }
    }
    for (std::size_t k : tied) resp[k * n + i] = 1.0 / static_cast<double>(tied.size());
  }
  GmmModel init = m_step(x, resp, k_count, nullptr, o);
  return run_em(std::move(init), x, o);
}

GmmFit refine_gmm(const GmmModel& start, const ColorSamples& samples, const GmmOptions& options) {
  check_options(options);
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "refine_gmm: no samples");
  return run_em(start, samples, options);
}

}  // namespace xclick
