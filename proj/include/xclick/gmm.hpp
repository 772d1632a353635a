#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "xclick/kernels/kernels.hpp"

namespace xclick {

// Planar RGB samples in [0,1].
struct ColorSamples {
  std::vector<double> r, g, b;

  std::size_t size() const noexcept { return r.size(); }
  bool empty() const noexcept { return r.empty(); }
  void push_back(double vr, double vg, double vb) {
    r.push_back(vr);
    g.push_back(vg);
    b.push_back(vb);
  }
  Eigen::Vector3d at(std::size_t i) const noexcept { return {r[i], g[i], b[i]}; }
};

enum class CovarianceFloor {
  // Sigma = S + eps*I.
  AddIdentity,
  // Sigma = V max(Lambda, eps) V^T: the likelihood maximizer over {Sigma >= eps*I}.
  ClipEigenvalues,
};

struct GaussianComponent {
  double weight = 0.0;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
};

class GmmModel {
 public:
  GmmModel() = default;
  explicit GmmModel(std::vector<GaussianComponent> components);

  std::span<const GaussianComponent> components() const noexcept { return components_; }
  std::size_t size() const noexcept { return components_.size(); }

  // -log sum_k w_k N(rgb; mu_k, Sigma_k)
  double neg_log_likelihood(const Eigen::Vector3d& rgb) const;
  void neg_log_likelihood(const ColorSamples& samples, std::span<double> out) const;

  // Per-component log(w_k N(x_i)) into `out` (component-major, size K*n).
  void component_log_densities(const ColorSamples& samples, std::span<double> out) const;

  double total_log_likelihood(const ColorSamples& samples) const;

 private:
  struct Cached {
    kernels::MahalanobisParams params;
    double log_scale;  // log w - 0.5 (3 log 2pi + log det Sigma)
  };

  std::vector<GaussianComponent> components_;
  std::vector<Cached> cached_;
};

struct GmmOptions {
  int components = 5;
  double covariance_floor = 1e-3;
  int em_iterations = 10;
  std::uint64_t seed = 0;
  CovarianceFloor floor_mode = CovarianceFloor::ClipEigenvalues;
};

struct GmmFit {
  GmmModel model;
  // Total log-likelihood before the first and after every EM iteration.
  std::vector<double> log_likelihood;
};

// k-means++ seeding (fixed seed), hard-assignment initial parameters, then EM.
GmmFit fit_gmm(const ColorSamples& samples, const GmmOptions& options = {});

// EM iterations starting from `start`.
GmmFit refine_gmm(const GmmModel& start, const ColorSamples& samples, const GmmOptions& options);

}  // namespace xclick
