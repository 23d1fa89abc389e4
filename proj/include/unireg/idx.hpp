#ifndef UNIREG_IDX_HPP_
#define UNIREG_IDX_HPP_

// IDX files as distributed with MNIST: big-endian u32 magic, then u32
// dimension sizes, then unsigned bytes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "unireg/data.hpp"

namespace unireg {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

// FormatError on bad magic or a short payload.
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path,
                      std::span<const std::uint8_t> labels);

// Images scaled to [0, 1] as [count x rows*cols]; num_classes is the largest
// label + 1. ContractError when the two files disagree on count.
LabeledBatch load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path);

}  // namespace unireg

#endif  // UNIREG_IDX_HPP_
