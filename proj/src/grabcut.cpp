#include "xclick/grabcut.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xclick/error.hpp"
#include "xclick/maxflow.hpp"

namespace xclick {

void EnergyConfig::validate() const {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  if (!(beta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "beta must be >= 0");
  if (gmm_components < 1) throw Error(ErrorCode::InvalidArgument, "gmm_components must be >= 1");
  if (!(covariance_floor > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "covariance_floor must be > 0");
  }
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (em_iterations < 0) throw Error(ErrorCode::InvalidArgument, "em_iterations must be >= 0");
}

double pairwise_weight(double e_p, double e_q, double lambda, double beta,
                       bool diagonal) noexcept {
  const double w = lambda * std::exp(-beta * (e_p + e_q));
  return diagonal ? w / std::numbers::sqrt2 : w;
}

int ring_margin(int box_width, int box_height) noexcept {
  const double s = static_cast<double>(box_width) + box_height;
  const double wh = static_cast<double>(box_width) * box_height;
  const double m = (-s + std::sqrt(s * s + 8.0 * wh)) / 4.0;
  return std::max(1, static_cast<int>(std::lround(m)));
}

namespace {

void check_box_in_image(const BoundingBox& box, int width, int height) {
  if (!box.valid() || box.x_min < 0 || box.y_min < 0 || box.x_max >= width ||
      box.y_max >= height) {
    throw Error(ErrorCode::OutOfBounds, "box must lie inside the image");
  }
}

void fill_background(SeedConfig& seeds, const BoundingBox& box, int width, int height) {
  seeds.clamp_background = BinaryMask(width, height, Label::Object);
  for (int y = box.y_min; y <= box.y_max; ++y)
    for (int x = box.x_min; x <= box.x_max; ++x) seeds.clamp_background.at(x, y) = Label::Background;

  const BoundingBox outer = box.dilated(ring_margin(box.width(), box.height()), width, height);
  seeds.background_init = BinaryMask(width, height);
  for (int y = outer.y_min; y <= outer.y_max; ++y)
    for (int x = outer.x_min; x <= outer.x_max; ++x)
      if (!box.contains({x, y})) seeds.background_init.at(x, y) = Label::Object;

  if (seeds.background_init.count(Label::Object) > 0) return;
  seeds.warnings.push_back("background ring is empty (box touches every border)");
  seeds.background_init = seeds.clamp_background;
  if (seeds.background_init.count(Label::Object) > 0) {
    seeds.warnings.push_back("background model initialized from all pixels outside the box");
    return;
  }
  // Box covers the whole image: use its outermost frame, unclamped.
  seeds.warnings.push_back(
      "box covers the whole image; background model initialized from the box frame");
  for (int y = box.y_min; y <= box.y_max; ++y) {
    for (int x = box.x_min; x <= box.x_max; ++x) {
      const bool frame = x == box.x_min || x == box.x_max || y == box.y_min || y == box.y_max;
      if (frame && seeds.clamp_object.at(x, y) != Label::Object) {
        seeds.background_init.at(x, y) = Label::Object;
      }
    }
  }
}

}  // namespace

SeedConfig build_box_seeds(const BoundingBox& box, int width, int height) {
  check_box_in_image(box, width, height);
  SeedConfig seeds;
  seeds.object_init = box_mask(box, width, height);

  const int cw = std::max(1, static_cast<int>(std::lround(box.width() / 2.0)));
  const int ch = std::max(1, static_cast<int>(std::lround(box.height() / 2.0)));
  const int cx = box.x_min + (box.width() - cw) / 2;
  const int cy = box.y_min + (box.height() - ch) / 2;
  seeds.clamp_object = box_mask({cx, cy, cx + cw - 1, cy + ch - 1}, width, height);

  fill_background(seeds, box, width, height);
  return seeds;
}

SeedConfig build_click_seeds(const SurfaceEstimate& surface, const ExtremeClicks& clicks,
                             const BoundingBox& box, int width, int height) {
  check_box_in_image(box, width, height);
  if (surface.surface.width() != width || surface.surface.height() != height) {
    throw Error(ErrorCode::DimensionMismatch, "surface estimate does not match the image");
  }
  SeedConfig seeds;
  seeds.object_init = BinaryMask(width, height);
  seeds.clamp_object = BinaryMask(width, height);
  // Everything outside the click box is clamped background, so the estimate
  // only contributes inside it.
  for (int y = box.y_min; y <= box.y_max; ++y) {
    for (int x = box.x_min; x <= box.x_max; ++x) {
      if (surface.surface.is_object(x, y)) seeds.object_init.at(x, y) = Label::Object;
      if (surface.skeleton.is_object(x, y)) seeds.clamp_object.at(x, y) = Label::Object;
    }
  }
  if (seeds.clamp_object.count(Label::Object) == 0) {
    seeds.warnings.push_back("skeleton empty inside the box; clamping the clicks instead");
    for (const Point& p : clicks.points) {
      seeds.clamp_object.at(p.x, p.y) = Label::Object;
      seeds.object_init.at(p.x, p.y) = Label::Object;
    }
  }
  fill_background(seeds, box, width, height);
  return seeds;
}

GridEnergy::GridEnergy(int w, int h) : width(w), height(h) {
  const std::size_t n = static_cast<std::size_t>(w) * h;
  unary_background.assign(n, 0.0);
  unary_object.assign(n, 0.0);
  right.assign(n, 0.0);
  down_right.assign(n, 0.0);
  down.assign(n, 0.0);
  down_left.assign(n, 0.0);
}

namespace {

template <typename Fn>
void for_each_pair(const GridEnergy& e, Fn&& fn) {
  for (int y = 0; y < e.height; ++y) {
    for (int x = 0; x < e.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * e.width + x;
      const bool has_right = x + 1 < e.width;
      const bool has_down = y + 1 < e.height;
      if (has_right) fn(i, i + 1, e.right[i]);
      if (has_right && has_down) fn(i, i + e.width + 1, e.down_right[i]);
      if (has_down) fn(i, i + e.width, e.down[i]);
      if (x > 0 && has_down) fn(i, i + e.width - 1, e.down_left[i]);
    }
  }
}

void check_energy(const GridEnergy& e) {
  const std::size_t n = static_cast<std::size_t>(e.width) * e.height;
  for (const auto* v : {&e.unary_background, &e.unary_object, &e.right, &e.down_right, &e.down,
                        &e.down_left}) {
    if (v->size() != n) throw Error(ErrorCode::DimensionMismatch, "grid energy arrays mis-sized");
  }
}

}  // namespace

double GridEnergy::evaluate(const Labeling& labeling) const {
  check_energy(*this);
  if (labeling.width() != width || labeling.height() != height) {
    throw Error(ErrorCode::DimensionMismatch, "labeling does not match the energy grid");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labeling.size(); ++i) {
    total += labeling[i] == Label::Object ? unary_object[i] : unary_background[i];
  }
  for_each_pair(*this, [&](std::size_t p, std::size_t q, double w) {
    if ((labeling[p] == Label::Object) != (labeling[q] == Label::Object)) total += w;
  });
  return total;
}

Labeling min_cut_segment(const GridEnergy& energy, const BinaryMask& clamp_object,
                         const BinaryMask& clamp_background) {
  check_energy(energy);
  const std::size_t n = static_cast<std::size_t>(energy.width) * energy.height;
  for (const BinaryMask* m : {&clamp_object, &clamp_background}) {
    if (!m->empty() && m->size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "clamp mask does not match the energy grid");
    }
  }
  auto clamped = [](const BinaryMask& m, std::size_t i) {
    return !m.empty() && m[i] == Label::Object;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (clamped(clamp_object, i) && clamped(clamp_background, i)) {
      throw Error(ErrorCode::InvalidArgument, "pixel clamped to both object and background");
    }
  }
  for_each_pair(energy, [](std::size_t, std::size_t, double w) {
    if (!(w >= 0.0)) throw Error(ErrorCode::Submodularity, "negative pairwise weight");
  });

  // Source side = object. s->p is cut when p is background, p->t when object.
  MaxFlowGraph graph(static_cast<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double u0 = energy.unary_background[i];
    const double u1 = energy.unary_object[i];
    const double base = std::min(u0, u1);
    double to_source = u0 - base;
    double to_sink = u1 - base;
    if (clamped(clamp_object, i)) to_source += kClampCapacity;
    if (clamped(clamp_background, i)) to_sink += kClampCapacity;
    graph.add_terminal_edge(static_cast<int>(i), to_source, to_sink);
  }
  for_each_pair(energy, [&](std::size_t p, std::size_t q, double w) {
    if (w > 0.0) graph.add_edge(static_cast<int>(p), static_cast<int>(q), w, w);
  });
  graph.solve();

  Labeling out(energy.width, energy.height);
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.in_source_set(static_cast<int>(i))) out[i] = Label::Object;
  }
  return out;
}

void fill_pairwise(GridEnergy& energy, const EdgeMap& edges, double lambda, double beta) {
  if (edges.width() != energy.width || edges.height() != energy.height) {
    throw Error(ErrorCode::DimensionMismatch, "edge map does not match the energy grid");
  }
  const auto e = edges.values();
  const int w = energy.width;
  for (int y = 0; y < energy.height; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const bool has_right = x + 1 < w;
      const bool has_down = y + 1 < energy.height;
      if (has_right) energy.right[i] = pairwise_weight(e[i], e[i + 1], lambda, beta);
      if (has_right && has_down) {
        energy.down_right[i] = pairwise_weight(e[i], e[i + w + 1], lambda, beta, true);
      }
      if (has_down) energy.down[i] = pairwise_weight(e[i], e[i + w], lambda, beta);
      if (x > 0 && has_down) {
        energy.down_left[i] = pairwise_weight(e[i], e[i + w - 1], lambda, beta, true);
      }
    }
  }
}

std::string_view to_string(SegmentMode mode) noexcept {
  return mode == SegmentMode::Box ? "box" : "clicks";
}

SegmentMode segment_mode_from_string(std::string_view name) {
  if (name == "box") return SegmentMode::Box;
  if (name == "clicks") return SegmentMode::Clicks;
  throw Error(ErrorCode::InvalidArgument, "mode must be 'box' or 'clicks'");
}

namespace {

ColorSamples all_samples(const RgbImage& image) {
  ColorSamples s;
  const auto r = image.plane(0);
  const auto g = image.plane(1);
  const auto b = image.plane(2);
  s.r.assign(r.begin(), r.end());
  s.g.assign(g.begin(), g.end());
  s.b.assign(b.begin(), b.end());
  return s;
}

ColorSamples select(const ColorSamples& all, const BinaryMask& mask, Label label) {
  ColorSamples s;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == label) s.push_back(all.r[i], all.g[i], all.b[i]);
  }
  return s;
}

// Warm-started refit; keeps the old model if EM did not lower the cost.
GmmModel refit(const GmmModel& current, const ColorSamples& samples, const GmmOptions& options) {
  if (samples.empty()) return current;
  GmmFit fit = refine_gmm(current, samples, options);
  if (fit.log_likelihood.back() >= fit.log_likelihood.front()) return std::move(fit.model);
  return current;
}

}  // namespace

SegmentationResult grabcut(const GrabCutInput& input, const EnergyConfig& config) {
  config.validate();
  if (!input.image || input.image->empty()) {
    throw Error(ErrorCode::InvalidArgument, "grabcut needs a non-empty image");
  }
  const RgbImage& image = *input.image;
  const int w = image.width();
  const int h = image.height();
  check_box_in_image(input.box, w, h);
  if (input.edges && (input.edges->width() != w || input.edges->height() != h)) {
    throw Error(ErrorCode::DimensionMismatch, "edge map does not match the image");
  }

  SegmentationResult result;
  EdgeMap fallback;
  const EdgeMap* edges = input.edges;
  if (input.mode == SegmentMode::Clicks) {
    if (!input.clicks) throw Error(ErrorCode::InvalidArgument, "click mode needs extreme clicks");
    if (!edges) throw Error(ErrorCode::InvalidArgument, "click mode needs an edge map");
    result.surface = estimate_surface(*input.clicks, *edges, {input.search_margin});
    result.seeds = build_click_seeds(*result.surface, *input.clicks, input.box, w, h);
  } else {
    if (!edges) {
      fallback = gradient_edges(image);
      edges = &fallback;
    }
    result.seeds = build_box_seeds(input.box, w, h);
  }
  if (result.seeds.background_init.count(Label::Object) == 0) {
    throw Error(ErrorCode::InvalidArgument, "no pixels available for the background model");
  }

  const ColorSamples pixels = all_samples(image);
  GmmOptions gmm{config.gmm_components, config.covariance_floor, config.em_iterations, input.seed,
                 CovarianceFloor::ClipEigenvalues};
  GmmModel object_model = fit_gmm(select(pixels, result.seeds.object_init, Label::Object), gmm).model;
  GmmModel background_model =
      fit_gmm(select(pixels, result.seeds.background_init, Label::Object), gmm).model;

  GridEnergy energy(w, h);
  fill_pairwise(energy, *edges, config.lambda, config.beta);

  std::optional<Labeling> previous;
  for (int it = 1; it <= config.max_iterations; ++it) {
    object_model.neg_log_likelihood(pixels, energy.unary_object);
    background_model.neg_log_likelihood(pixels, energy.unary_background);
    Labeling labeling =
        min_cut_segment(energy, result.seeds.clamp_object, result.seeds.clamp_background);
    result.energy = energy.evaluate(labeling);
    result.cut_energies.push_back(result.energy);
    result.iterations = it;
    const bool converged = previous && *previous == labeling;
    previous = std::move(labeling);
    if (converged || it == config.max_iterations) break;

    object_model = refit(object_model, select(pixels, *previous, Label::Object), gmm);
    background_model = refit(background_model, select(pixels, *previous, Label::Background), gmm);
  }
  result.labeling = std::move(*previous);
  return result;
}

}  // namespace xclick
