#include "tnad/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace tnad {
namespace {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (f == nullptr) throw DataError("cannot open " + path.string());
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> buf(1 << 16);
    int n = 0;
    while ((n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()))) > 0)
      out.insert(out.end(), buf.begin(), buf.begin() + n);
    const bool failed = n < 0;
    gzclose(f);
    if (failed) throw DataError("corrupt gzip stream in " + path.string());
    return out;
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(std::span<const std::uint8_t> raw, std::size_t offset) {
  return std::uint32_t{raw[offset]} << 24 | std::uint32_t{raw[offset + 1]} << 16 |
         std::uint32_t{raw[offset + 2]} << 8 | std::uint32_t{raw[offset + 3]};
}

}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> raw) {
  if (raw.size() < 4) throw DataError("IDX file truncated at offset 0: missing magic number");
  if (raw[0] != 0 || raw[1] != 0 || raw[2] != 0x08)
    throw DataError("bad IDX magic at offset 0: expected 0x000008NN, got 0x" + [&] {
      std::ostringstream os;
      os << std::hex << std::setw(8) << std::setfill('0') << be32(raw, 0);
      return os.str();
    }());
  const std::size_t ndims = raw[3];
  if (ndims == 0) throw DataError("bad IDX magic at offset 0: zero dimensions");
  const std::size_t header = 4 + 4 * ndims;
  if (raw.size() < header)
    throw DataError("IDX file truncated at offset " + std::to_string(raw.size()) + ": header needs " +
                    std::to_string(header) + " bytes");
  IdxArray out;
  std::size_t count = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    const std::uint32_t dim = be32(raw, 4 + 4 * d);
    out.dims.push_back(dim);
    if (dim != 0 && count > std::numeric_limits<std::size_t>::max() / dim)
      throw DataError("IDX dimension overflow at offset " + std::to_string(4 + 4 * d));
    count *= dim;
  }
  if (raw.size() - header < count)
    throw DataError("IDX file truncated at offset " + std::to_string(raw.size()) + ": expected " +
                    std::to_string(count) + " payload bytes, found " + std::to_string(raw.size() - header));
  if (raw.size() - header > count)
    throw DataError("IDX file has " + std::to_string(raw.size() - header - count) + " trailing bytes after offset " +
                    std::to_string(header + count));
  out.bytes.assign(raw.begin() + static_cast<std::ptrdiff_t>(header), raw.end());
  return out;
}

IdxArray read_idx(const std::filesystem::path& path) {
  const auto raw = read_file_bytes(path);
  try {
    return parse_idx(raw);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_idx(const IdxArray& array) {
  if (array.dims.empty() || array.dims.size() > 255) throw DataError("IDX arrays need 1..255 dimensions");
  std::vector<std::uint8_t> out{0, 0, 0x08, static_cast<std::uint8_t>(array.dims.size())};
  for (auto d : array.dims)
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>((d >> shift) & 0xff));
  out.insert(out.end(), array.bytes.begin(), array.bytes.end());
  return out;
}

void write_idx(const std::filesystem::path& path, const IdxArray& array) {
  const auto bytes = encode_idx(array);
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (f == nullptr) throw DataError("cannot open " + path.string() + " for writing");
    const int n = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
    gzclose(f);
    if (n != static_cast<int>(bytes.size())) throw DataError("failed writing " + path.string());
    return;
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw DataError("failed writing " + path.string());
}

ImageDataset read_image_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
  IdxArray img = read_idx(images);
  IdxArray lab = read_idx(labels);
  if (img.dims.size() != 3) throw DataError(images.string() + ": expected a 3-dimensional image array");
  if (lab.dims.size() != 1) throw DataError(labels.string() + ": expected a 1-dimensional label array");
  if (img.dims[0] != lab.dims[0])
    throw DataError("image count " + std::to_string(img.dims[0]) + " does not match label count " +
                    std::to_string(lab.dims[0]));
  ImageDataset ds;
  ds.rows = img.dims[1];
  ds.cols = img.dims[2];
  ds.pixels = std::move(img.bytes);
  ds.labels = std::move(lab.bytes);
  return ds;
}

std::vector<double> preprocess_image(std::span<const std::uint8_t> pixels, std::size_t rows, std::size_t cols) {
  if (rows % 2 != 0 || cols % 2 != 0 || rows == 0 || cols == 0)
    throw std::invalid_argument("max pooling needs even image dimensions, got " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  if (pixels.size() != rows * cols)
    throw std::invalid_argument("image has " + std::to_string(pixels.size()) + " pixels, expected " +
                                std::to_string(rows * cols));
  std::vector<double> out;
  out.reserve(rows * cols / 4);
  for (std::size_t r = 0; r < rows; r += 2)
    for (std::size_t c = 0; c < cols; c += 2) {
      const std::uint8_t m = std::max({pixels[r * cols + c], pixels[r * cols + c + 1], pixels[(r + 1) * cols + c],
                                       pixels[(r + 1) * cols + c + 1]});
      out.push_back(static_cast<double>(m) / 255.0);
    }
  return out;
}

std::size_t TabularDataset::anomaly_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::anomalous));
}

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

TabularDataset parse_tabular_csv(const std::string& text, const std::string& source) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  TabularDataset ds;

  std::vector<std::string> header;
  while (std::getline(is, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw DataError(source + ": empty file, expected a header row");
  for (auto cell : split_csv_line(line)) header.emplace_back(trim(cell));
  const auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw DataError(source + ": missing 'label' column");
  const std::size_t label_col = static_cast<std::size_t>(label_it - header.begin());
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_col) ds.feature_names.push_back(header[c]);
  if (ds.feature_names.empty()) throw DataError(source + ": no feature columns");

  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                      " columns, found " + std::to_string(cells.size()));
    std::vector<double> row;
    row.reserve(ds.feature_names.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto cell = trim(cells[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw DataError(source + ":" + std::to_string(line_no) + ": non-numeric value '" + std::string(cell) +
                        "' in column '" + header[c] + "'");
      if (c == label_col) {
        if (v != 0.0 && v != 1.0)
          throw DataError(source + ":" + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                          std::string(cell) + "'");
        ds.labels.push_back(v == 0.0 ? Label::normal : Label::anomalous);
      } else {
        row.push_back(v);
      }
    }
    ds.features.push_back(std::move(row));
  }
  if (ds.features.empty()) throw DataError(source + ": no data rows");
  return ds;
}

TabularDataset read_tabular_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_tabular_csv(ss.str(), path.string());
}

Standardizer Standardizer::fit(std::span<const std::vector<double>> rows) {
  if (rows.empty()) throw std::invalid_argument("cannot standardize an empty split");
  const std::size_t n = rows.front().size();
  Standardizer s;
  s.mean.assign(n, 0.0);
  s.stddev.assign(n, 0.0);
  for (const auto& r : rows) {
    if (r.size() != n) throw std::invalid_argument("ragged feature rows");
    for (std::size_t j = 0; j < n; ++j) s.mean[j] += r[j];
  }
  for (auto& m : s.mean) m /= static_cast<double>(rows.size());
  for (const auto& r : rows)
    for (std::size_t j = 0; j < n; ++j) s.stddev[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
  for (std::size_t j = 0; j < n; ++j) {
    s.stddev[j] = std::sqrt(s.stddev[j] / static_cast<double>(rows.size()));
    if (!(s.stddev[j] > 1e-12 * std::max(1.0, std::abs(s.mean[j])))) {
      s.constant_features.push_back(j);
      s.stddev[j] = 1.0;
    }
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  if (row.size() != mean.size())
    throw std::invalid_argument("row has " + std::to_string(row.size()) + " features, standardizer has " +
                                std::to_string(mean.size()));
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / stddev[j];
  return out;
}

std::vector<std::vector<double>> Standardizer::apply_all(std::span<const std::vector<double>> rows) const {
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(apply(r));
  return out;
}

void Standardizer::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os << "mean,stddev,constant\n" << std::setprecision(17);
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const bool constant = std::find(constant_features.begin(), constant_features.end(), j) != constant_features.end();
    os << mean[j] << ',' << stddev[j] << ',' << (constant ? 1 : 0) << '\n';
  }
}

Standardizer Standardizer::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  Standardizer s;
  std::size_t j = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) throw DataError(path.string() + ": malformed standardization row");
    double v[3];
    for (int k = 0; k < 3; ++k) {
      const auto cell = trim(cells[k]);
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v[k]);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw DataError(path.string() + ": malformed standardization row");
    }
    s.mean.push_back(v[0]);
    s.stddev.push_back(v[1]);
    if (v[2] != 0.0) s.constant_features.push_back(j);
    ++j;
  }
  return s;
}

}  // namespace tnad
