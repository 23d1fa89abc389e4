#include "unireg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "unireg/error.hpp"

namespace unireg {

ImageGeometry ImageGeometry::infer(std::size_t flat_width) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(flat_width))));
  if (side == 0 || side * side != flat_width) {
    throw ConfigError("cannot reshape width " + std::to_string(flat_width) +
                          " into a square image; give the geometry explicitly",
                      "ood.image_side");
  }
  return ImageGeometry{side, side};
}

ImageAffine sample_image_affine(Rng& rng, const AffineRanges& ranges) {
  ImageAffine t;
  t.dx = rng.uniform(-ranges.max_translation, ranges.max_translation);
  t.dy = rng.uniform(-ranges.max_translation, ranges.max_translation);
  t.rotation_deg = rng.uniform(-ranges.max_rotation_deg, ranges.max_rotation_deg);
  t.scale = rng.uniform(ranges.min_scale, ranges.max_scale);
  return t;
}

void apply_image_affine(std::span<const double> image, std::span<double> out,
                        const ImageGeometry& g, const ImageAffine& t) {
  if (image.size() != g.pixels() || out.size() != g.pixels()) {
    throw DimensionError("apply_image_affine: buffer size does not match geometry");
  }
  if (!(t.scale > 0.0)) throw ContractError("apply_image_affine: scale must be positive");
  const double a = t.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a);
  const double s = std::sin(a);
  const double cx = (static_cast<double>(g.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(g.height) - 1.0) / 2.0;
  for (std::size_t r = 0; r < g.height; ++r) {
    for (std::size_t col = 0; col < g.width; ++col) {
      const double qx = static_cast<double>(col) - cx - t.dx;
      const double qy = static_cast<double>(r) - cy - t.dy;
      // Inverse rotation, then inverse scale.
      const double px = (c * qx + s * qy) / t.scale + cx;
      const double py = (-s * qx + c * qy) / t.scale + cy;
      const double sx = std::nearbyint(px);
      const double sy = std::nearbyint(py);
      double v = 0.0;
      if (sx >= 0.0 && sy >= 0.0 && sx < static_cast<double>(g.width) &&
          sy < static_cast<double>(g.height)) {
        v = image[static_cast<std::size_t>(sy) * g.width + static_cast<std::size_t>(sx)];
      }
      out[r * g.width + col] = v;
    }
  }
}

Tensor apply_image_affine(const Tensor& images, const ImageGeometry& geometry,
                          const ImageAffine& transform) {
  return augment_ood(images, geometry, [&] { return transform; });
}

Tensor augment_ood(const Tensor& images, const ImageGeometry& geometry,
                   const std::function<ImageAffine()>& draw) {
  if (images.rank() != 2 || images.cols() != geometry.pixels()) {
    throw DimensionError("augment_ood: batch " + shape_string(images.shape()) +
                         " does not match the image geometry");
  }
  Tensor out(images.shape());
  const std::size_t p = geometry.pixels();
  for (std::size_t i = 0; i < images.rows(); ++i) {
    apply_image_affine(images.values().subspan(i * p, p), out.values().subspan(i * p, p),
                       geometry, draw());
  }
  return out;
}

Tensor augment_ood(const Tensor& images, Rng& rng, std::optional<ImageGeometry> geometry,
                   const AffineRanges& ranges) {
  if (images.rank() != 2) throw DimensionError("augment_ood needs [b x pixels] input");
  const ImageGeometry g = geometry ? *geometry : ImageGeometry::infer(images.cols());
  return augment_ood(images, g, [&] { return sample_image_affine(rng, ranges); });
}

namespace {

void draw_stroke(Tensor& img, const ImageGeometry& g, double x0, double y0, double x1,
                 double y1) {
  const double len = std::hypot(x1 - x0, y1 - y0);
  const int steps = std::max(2, static_cast<int>(std::ceil(len * 2.0)));
  for (int i = 0; i <= steps; ++i) {
    const double f = static_cast<double>(i) / steps;
    const auto x = static_cast<long>(std::lround(x0 + f * (x1 - x0)));
    const auto y = static_cast<long>(std::lround(y0 + f * (y1 - y0)));
    if (x < 0 || y < 0 || x >= static_cast<long>(g.width) ||
        y >= static_cast<long>(g.height)) {
      continue;
    }
    img[static_cast<std::size_t>(y) * g.width + static_cast<std::size_t>(x)] = 1.0;
  }
}

}  // namespace

GlyphTask make_glyph_task(std::size_t n_classes, std::size_t side, std::uint64_t seed) {
  if (n_classes < 2) throw ConfigError("needs >= 2 classes", "ood.n_classes");
  if (side < 8) throw ConfigError("must be >= 8", "ood.image_side");
  Rng rng(seed);
  GlyphTask task;
  task.geometry = ImageGeometry{side, side};
  const double lo = 0.2 * static_cast<double>(side - 1);
  const double hi = 0.8 * static_cast<double>(side - 1);
  for (std::size_t c = 0; c < n_classes; ++c) {
    Tensor img({side * side});
    double x = rng.uniform(lo, hi);
    double y = rng.uniform(lo, hi);
    for (int stroke = 0; stroke < 3; ++stroke) {
      const double nx = rng.uniform(lo, hi);
      const double ny = rng.uniform(lo, hi);
      draw_stroke(img, task.geometry, x, y, nx, ny);
      x = nx;
      y = ny;
    }
    task.templates.push_back(std::move(img));
  }
  return task;
}

LabeledBatch GlyphTask::sample(std::size_t n, Rng& rng) const {
  if (n == 0) throw ContractError("glyph sample needs n >= 1");
  const std::size_t p = geometry.pixels();
  LabeledBatch out;
  out.num_classes = num_classes();
  out.inputs = Tensor({n, p});
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % num_classes();
    out.labels[i] = static_cast<int>(y);
    ImageAffine jitter;
    jitter.dx = static_cast<double>(static_cast<long>(rng.index(3)) - 1);
    jitter.dy = static_cast<double>(static_cast<long>(rng.index(3)) - 1);
    auto row = out.inputs.values().subspan(i * p, p);
    apply_image_affine(templates[y].values(), row, geometry, jitter);
    for (double& v : row) v = std::clamp(v + pixel_noise * rng.normal(), 0.0, 1.0);
  }
  return out;
}

}  // namespace unireg
