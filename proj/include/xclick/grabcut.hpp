#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xclick/contour.hpp"
#include "xclick/edge_map.hpp"
#include "xclick/geometry.hpp"
#include "xclick/gmm.hpp"
#include "xclick/image_io.hpp"

namespace xclick {

using Labeling = BinaryMask;

struct EnergyConfig {
  double lambda = 5.0;
  double beta = 2.0;
  int gmm_components = 5;
  double covariance_floor = 1e-3;
  int max_iterations = 5;
  int em_iterations = 10;

  void validate() const;
};

struct SeedConfig {
  BinaryMask clamp_object;
  BinaryMask clamp_background;
  BinaryMask object_init;
  BinaryMask background_init;
  std::vector<std::string> warnings;
};

// Potts weight between neighbors: lambda * exp(-beta * (e_p + e_q)),
// scaled by 1/sqrt(2) for diagonal neighbors.
double pairwise_weight(double e_p, double e_q, double lambda, double beta,
                       bool diagonal = false) noexcept;

// Margin m of the background ring so that ring area ~ 2 * box area.
int ring_margin(int box_width, int box_height) noexcept;

SeedConfig build_box_seeds(const BoundingBox& box, int width, int height);
SeedConfig build_click_seeds(const SurfaceEstimate& surface, const ExtremeClicks& clicks,
                             const BoundingBox& box, int width, int height);

// Binary energy on the 8-connected grid. Each unordered neighbor pair is
// stored once, on the pixel that comes first in scan order.
struct GridEnergy {
  int width = 0;
  int height = 0;
  std::vector<double> unary_background;  // U(l_p = 0)
  std::vector<double> unary_object;      // U(l_p = 1)
  std::vector<double> right;             // (x,y)-(x+1,y)
  std::vector<double> down_right;        // (x,y)-(x+1,y+1)
  std::vector<double> down;              // (x,y)-(x,y+1)
  std::vector<double> down_left;         // (x,y)-(x-1,y+1)

  GridEnergy() = default;
  GridEnergy(int w, int h);

  double evaluate(const Labeling& labeling) const;
};

inline constexpr double kClampCapacity = 1e9;

// Global minimizer of `energy` subject to the clamp masks (either may be empty).
Labeling min_cut_segment(const GridEnergy& energy, const BinaryMask& clamp_object,
                         const BinaryMask& clamp_background);

// Edge-based pairwise terms for every neighbor pair of `edges`.
void fill_pairwise(GridEnergy& energy, const EdgeMap& edges, double lambda, double beta);

enum class SegmentMode { Box, Clicks };

std::string_view to_string(SegmentMode mode) noexcept;
SegmentMode segment_mode_from_string(std::string_view name);

struct GrabCutInput {
  const RgbImage* image = nullptr;
  BoundingBox box;
  std::optional<ExtremeClicks> clicks;  // required in click mode
  const EdgeMap* edges = nullptr;       // required in click mode; box mode falls back to gradients
  SegmentMode mode = SegmentMode::Box;
  int search_margin = 5;
  std::uint64_t seed = 0;
};

struct SegmentationResult {
  Labeling labeling;
  double energy = 0.0;
  int iterations = 0;
  SeedConfig seeds;
  // Energy right after each graph cut.
  std::vector<double> cut_energies;
  std::optional<SurfaceEstimate> surface;
};

SegmentationResult grabcut(const GrabCutInput& input, const EnergyConfig& config = {});

}  // namespace xclick
