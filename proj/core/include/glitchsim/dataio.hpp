#pragma once

// File formats: MNIST IDX ingestion, the DSQW quantized-weight file, and
// tabular result emission (CSV and JSON).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "glitchsim/model.hpp"

namespace glitchsim {

struct ImageSet {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // row-major, image after image

  std::span<const std::uint8_t> image(std::size_t i) const {
    const std::size_t n = std::size_t{rows} * cols;
    return {pixels.data() + i * n, n};
  }
};

struct LabelSet {
  std::uint32_t count = 0;
  std::vector<std::uint8_t> labels;
};

struct Dataset {
  ImageSet images;
  LabelSet labels;

  std::size_t size() const { return images.count; }
  /// First n samples (or all, if n is 0 or exceeds the size).
  Dataset head(std::size_t n) const;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

ImageSet parse_idx_images(std::span<const std::uint8_t> bytes);
LabelSet parse_idx_labels(std::span<const std::uint8_t> bytes);
ImageSet load_idx_images(const std::filesystem::path& path);
LabelSet load_idx_labels(const std::filesystem::path& path);

/// Loads `<prefix>-images-idx3-ubyte` and `<prefix>-labels-idx1-ubyte` from
/// dir (prefix "train" or "t10k"). Throws DatasetNotFound if either is absent
/// and DimensionMismatch if the counts disagree.
Dataset load_mnist(const std::filesystem::path& dir, const std::string& prefix);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

// DSQW weight file, little-endian:
//   "DSQW" | u16 version=1 | u16 layer_count
//   per layer: u8 kind | 4 x u32 dims | u8 total_bits, u8 integer_bits, u8 signed
//              | weights | biases   (each code in ceil(total_bits/8) bytes)
//   u32 CRC-32 of every preceding byte
inline constexpr std::uint16_t kWeightFileVersion = 1;

std::vector<std::uint8_t> serialize_weights(const QuantizedModel& model);
QuantizedModel parse_weights(std::span<const std::uint8_t> bytes);
void save_weights(const QuantizedModel& model, const std::filesystem::path& path);
QuantizedModel load_weights(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// A result table with a fixed column set; emitted as CSV (header row first)
/// or as a JSON array of row objects.
class Table {
 public:
  using Cell = std::variant<std::int64_t, double, std::string>;

  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  /// Throws InvalidArgument if the row width differs from the column count.
  void add_row(std::vector<Cell> row);

  std::string to_csv() const;
  std::string to_json() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

/// Shortest round-trip decimal form of a double; stable across runs.
std::string format_double(double v);

}  // namespace glitchsim
