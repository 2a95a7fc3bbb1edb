#include "glitchsim/dataio.hpp"

#include <zlib.h>

#include <charconv>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "glitchsim/errors.hpp"

namespace glitchsim {

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw Error(ErrorCode::TruncatedFile, std::string(what) + ": need " + std::to_string(n) + " bytes at offset " +
                                                std::to_string(pos_) + ", file has " + std::to_string(bytes_.size()));
  }
  std::uint32_t be32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }
  std::uint64_t le(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

int code_bytes(const QFormat& fmt) { return (fmt.total_bits + 7) / 8; }

std::int32_t decode_code(std::uint64_t v, const QFormat& fmt, int width) {
  if (fmt.is_signed && width < 8) {
    const std::uint64_t sign = std::uint64_t{1} << (8 * width - 1);
    if (v & sign) return static_cast<std::int32_t>(static_cast<std::int64_t>(v) - static_cast<std::int64_t>(sign << 1));
  }
  return static_cast<std::int32_t>(v);
}

}  // namespace

Dataset Dataset::head(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  Dataset d;
  d.images.count = static_cast<std::uint32_t>(n);
  d.images.rows = images.rows;
  d.images.cols = images.cols;
  const std::size_t px = std::size_t{images.rows} * images.cols;
  d.images.pixels.assign(images.pixels.begin(), images.pixels.begin() + static_cast<std::ptrdiff_t>(n * px));
  d.labels.count = static_cast<std::uint32_t>(n);
  d.labels.labels.assign(labels.labels.begin(), labels.labels.begin() + static_cast<std::ptrdiff_t>(n));
  return d;
}

ImageSet parse_idx_images(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::uint32_t magic = r.be32("idx magic");
  if (magic != kIdxImageMagic) throw Error(ErrorCode::BadMagic, "expected image magic 0x00000803");
  ImageSet set;
  set.count = r.be32("image count");
  set.rows = r.be32("row count");
  set.cols = r.be32("column count");
  if (set.rows != 28 || set.cols != 28)
    throw Error(ErrorCode::DimensionMismatch,
                "images are " + std::to_string(set.rows) + "x" + std::to_string(set.cols) + ", expected 28x28");
  const std::size_t payload = std::size_t{set.count} * set.rows * set.cols;
  auto px = r.take(payload, "image payload");
  if (r.remaining() != 0) throw Error(ErrorCode::DimensionMismatch, "trailing bytes after image payload");
  set.pixels.assign(px.begin(), px.end());
  return set;
}

LabelSet parse_idx_labels(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::uint32_t magic = r.be32("idx magic");
  if (magic != kIdxLabelMagic) throw Error(ErrorCode::BadMagic, "expected label magic 0x00000801");
  LabelSet set;
  set.count = r.be32("label count");
  auto payload = r.take(set.count, "label payload");
  if (r.remaining() != 0) throw Error(ErrorCode::DimensionMismatch, "trailing bytes after label payload");
  for (std::size_t i = 0; i < payload.size(); ++i)
    if (payload[i] > 9)
      throw Error(ErrorCode::ValueOutOfRange, "label " + std::to_string(payload[i]) + " at index " + std::to_string(i));
  set.labels.assign(payload.begin(), payload.end());
  return set;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw Error(ErrorCode::IoError, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

ImageSet load_idx_images(const std::filesystem::path& path) { return parse_idx_images(read_file(path)); }
LabelSet load_idx_labels(const std::filesystem::path& path) { return parse_idx_labels(read_file(path)); }

Dataset load_mnist(const std::filesystem::path& dir, const std::string& prefix) {
  const auto img = dir / (prefix + "-images-idx3-ubyte");
  const auto lbl = dir / (prefix + "-labels-idx1-ubyte");
  for (const auto& p : {img, lbl})
    if (!std::filesystem::is_regular_file(p)) throw Error(ErrorCode::DatasetNotFound, p.string());
  Dataset d{load_idx_images(img), load_idx_labels(lbl)};
  if (d.images.count != d.labels.count)
    throw Error(ErrorCode::DimensionMismatch, std::to_string(d.images.count) + " images but " +
                                                  std::to_string(d.labels.count) + " labels");
  return d;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    crc = ::crc32(crc, bytes.data() + off, n);
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_weights(const QuantizedModel& model) {
  model.validate();
  std::vector<std::uint8_t> out{'D', 'S', 'Q', 'W'};
  put_le(out, kWeightFileVersion, 2);
  put_le(out, model.layers.size(), 2);
  for (const QLayer& l : model.layers) {
    out.push_back(static_cast<std::uint8_t>(l.kind));
    for (auto d : l.dims) put_le(out, d, 4);
    out.push_back(static_cast<std::uint8_t>(l.fmt.total_bits));
    out.push_back(static_cast<std::uint8_t>(l.fmt.integer_bits));
    out.push_back(l.fmt.is_signed ? 1 : 0);
    const int w = code_bytes(l.fmt);
    for (auto v : l.weights) put_le(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(v)), w);
    for (auto v : l.biases) put_le(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(v)), w);
  }
  put_le(out, crc32(out), 4);
  return out;
}

QuantizedModel parse_weights(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  auto magic = r.take(4, "weight magic");
  if (!(magic[0] == 'D' && magic[1] == 'S' && magic[2] == 'Q' && magic[3] == 'W'))
    throw Error(ErrorCode::BadMagic, "not a DSQW weight file");
  const auto version = static_cast<std::uint16_t>(r.le(2, "version"));
  if (version != kWeightFileVersion)
    throw Error(ErrorCode::VersionMismatch, "weight file version " + std::to_string(version));
  const auto n_layers = static_cast<std::uint16_t>(r.le(2, "layer count"));
  if (bytes.size() < 12) throw Error(ErrorCode::TruncatedFile, "no room for checksum");
  const std::uint32_t stored = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                               static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8 |
                               static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24;
  const auto body = bytes.first(bytes.size() - 4);

  QuantizedModel m;
  Reader lr(body);
  lr.take(8, "header");
  std::vector<LayerKind> kinds;
  for (std::uint16_t i = 0; i < n_layers; ++i) {
    QLayer l;
    const auto kind = static_cast<std::uint8_t>(lr.le(1, "layer kind"));
    if (kind > 2) {
      if (crc32(body) != stored) throw Error(ErrorCode::ChecksumMismatch, "CRC-32 mismatch");
      throw Error(ErrorCode::ValueOutOfRange, "unknown layer kind " + std::to_string(kind));
    }
    l.kind = static_cast<LayerKind>(kind);
    for (auto& d : l.dims) d = static_cast<std::uint32_t>(lr.le(4, "layer dims"));
    l.fmt.total_bits = static_cast<int>(lr.le(1, "format"));
    l.fmt.integer_bits = static_cast<int>(lr.le(1, "format"));
    l.fmt.is_signed = lr.le(1, "format") != 0;
    if (l.fmt.total_bits < 1 || l.fmt.total_bits > 16 || l.fmt.integer_bits < 1 || l.fmt.integer_bits > l.fmt.total_bits) {
      if (crc32(body) != stored) throw Error(ErrorCode::ChecksumMismatch, "CRC-32 mismatch");
      throw Error(ErrorCode::ValueOutOfRange, "unsupported layer format");
    }
    const int w = code_bytes(l.fmt);
    const std::size_t nw = weight_count(l.kind, l.dims);
    const std::size_t nb = bias_count(l.kind, l.dims);
    lr.need((nw + nb) * static_cast<std::size_t>(w), "layer parameters");
    l.weights.reserve(nw);
    for (std::size_t k = 0; k < nw; ++k) l.weights.push_back(decode_code(lr.le(w, "weight"), l.fmt, w));
    for (std::size_t k = 0; k < nb; ++k) l.biases.push_back(decode_code(lr.le(w, "bias"), l.fmt, w));
    kinds.push_back(l.kind);
    m.layers.push_back(std::move(l));
  }
  if (lr.remaining() != 0) throw Error(ErrorCode::TruncatedFile, "payload length disagrees with layer dims");
  if (crc32(body) != stored) throw Error(ErrorCode::ChecksumMismatch, "CRC-32 mismatch");
  const auto acts = positional_activations(kinds);
  for (std::size_t i = 0; i < m.layers.size(); ++i) m.layers[i].activation = acts[i];
  m.validate();
  return m;
}

void save_weights(const QuantizedModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_weights(model));
}

QuantizedModel load_weights(const std::filesystem::path& path) { return parse_weights(read_file(path)); }

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size())
    throw Error(ErrorCode::InvalidArgument, "row has " + std::to_string(row.size()) + " cells, table has " +
                                                std::to_string(columns_.size()) + " columns");
  rows_.push_back(std::move(row));
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_cell(const Table::Cell& c) {
  if (auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (auto* d = std::get_if<double>(&c)) return format_double(*d);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_cell(row[i]);
    out += '\n';
  }
  return out;
}

std::string Table::to_json() const {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : rows_) {
    nlohmann::ordered_json obj;
    for (std::size_t i = 0; i < row.size(); ++i)
      std::visit([&](const auto& v) { obj[columns_[i]] = v; }, row[i]);
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

}  // namespace glitchsim
