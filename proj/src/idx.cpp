#include "unireg/idx.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

#include "unireg/error.hpp"

namespace unireg {

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                   const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw FormatError("truncated IDX header in " + path.string());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

std::string hex(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s = "0x00000000";
  for (int i = 0; i < 8; ++i) s[9 - i] = digits[(v >> (4 * i)) & 0xf];
  return s;
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_all(path);
  const std::uint32_t magic = be32(bytes, 0, path);
  if (magic != kIdxImageMagic) {
    throw FormatError("bad IDX image magic " + hex(magic) + " in " + path.string());
  }
  IdxImages images;
  images.count = be32(bytes, 4, path);
  images.rows = be32(bytes, 8, path);
  images.cols = be32(bytes, 12, path);
  const std::uint64_t payload =
      std::uint64_t{images.count} * images.rows * images.cols;
  if (bytes.size() - 16 < payload) {
    throw FormatError("truncated IDX image payload in " + path.string());
  }
  images.pixels.assign(bytes.begin() + 16,
                       bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return images;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_all(path);
  const std::uint32_t magic = be32(bytes, 0, path);
  if (magic != kIdxLabelMagic) {
    throw FormatError("bad IDX label magic " + hex(magic) + " in " + path.string());
  }
  const std::uint32_t count = be32(bytes, 4, path);
  if (bytes.size() - 8 < count) {
    throw FormatError("truncated IDX label payload in " + path.string());
  }
  return std::vector<std::uint8_t>(bytes.begin() + 8, bytes.begin() + 8 + count);
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  if (images.pixels.size() != std::size_t{images.count} * images.rows * images.cols) {
    throw ContractError("write_idx_images: pixel count does not match header");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  put_be32(out, kIdxImageMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_idx_labels(const std::filesystem::path& path,
                      std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

LabeledBatch load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path) {
  const IdxImages images = read_idx_images(images_path);
  const std::vector<std::uint8_t> labels = read_idx_labels(labels_path);
  if (labels.size() != images.count) {
    throw ContractError("IDX image count " + std::to_string(images.count) +
                        " does not match label count " + std::to_string(labels.size()));
  }
  if (images.count == 0 || images.rows == 0 || images.cols == 0) {
    throw FormatError("IDX file holds no images: " + images_path.string());
  }
  const std::size_t p = std::size_t{images.rows} * images.cols;
  LabeledBatch out;
  out.inputs = Tensor({images.count, p});
  for (std::size_t i = 0; i < images.pixels.size(); ++i) {
    out.inputs[i] = static_cast<double>(images.pixels[i]) / 255.0;
  }
  out.labels.assign(labels.begin(), labels.end());
  out.num_classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  return out;
}

}  // namespace unireg
