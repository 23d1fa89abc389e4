#ifndef UNIREG_AUGMENT_HPP_
#define UNIREG_AUGMENT_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "unireg/data.hpp"
#include "unireg/rng.hpp"
#include "unireg/tensor.hpp"

namespace unireg {

struct ImageGeometry {
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t pixels() const { return height * width; }
  // Square geometry for a flat width; ConfigError when not a perfect square.
  static ImageGeometry infer(std::size_t flat_width);
};

// Output pixel q takes the source pixel nearest to
//   c + R(-rotation) (q - c - (dx, dy)) / scale,
// c the image centre, x along columns and y along rows. Out-of-bounds
// sources read as 0.
struct ImageAffine {
  double dx = 0.0;
  double dy = 0.0;
  double rotation_deg = 0.0;
  double scale = 1.0;
};

struct AffineRanges {
  double max_translation = 4.0;
  double max_rotation_deg = 30.0;
  double min_scale = 0.75;
  double max_scale = 1.25;
};

ImageAffine sample_image_affine(Rng& rng, const AffineRanges& ranges = {});

void apply_image_affine(std::span<const double> image, std::span<double> out,
                        const ImageGeometry& geometry, const ImageAffine& transform);
Tensor apply_image_affine(const Tensor& images, const ImageGeometry& geometry,
                          const ImageAffine& transform);

// Independent random affine per row of a [b x h*w] batch.
Tensor augment_ood(const Tensor& images, Rng& rng,
                   std::optional<ImageGeometry> geometry = std::nullopt,
                   const AffineRanges& ranges = {});
Tensor augment_ood(const Tensor& images, const ImageGeometry& geometry,
                   const std::function<ImageAffine()>& draw);

// Procedural glyph images: each class is a fixed set of strokes; samples
// jitter the glyph by up to one pixel and add pixel noise, clamped to [0,1].
struct GlyphTask {
  ImageGeometry geometry;
  std::vector<Tensor> templates;  // one [h*w] image per class
  double pixel_noise = 0.1;

  std::size_t num_classes() const { return templates.size(); }
  LabeledBatch sample(std::size_t n, Rng& rng) const;
};

GlyphTask make_glyph_task(std::size_t n_classes, std::size_t side, std::uint64_t seed);

}  // namespace unireg

#endif  // UNIREG_AUGMENT_HPP_
