#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "tnad/data_io.hpp"

using namespace tnad;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "tnad_unit";
  fs::create_directories(dir);
  return dir / name;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

// Two 2x2 images: (0, 1, 2, 3) and (250, 251, 252, 255).
std::vector<std::uint8_t> image_fixture() {
  std::vector<std::uint8_t> raw;
  put_u32(raw, 0x00000803);
  put_u32(raw, 2);
  put_u32(raw, 2);
  put_u32(raw, 2);
  for (std::uint8_t v : {0, 1, 2, 3, 250, 251, 252, 255}) raw.push_back(v);
  return raw;
}

}  // namespace

TEST_CASE("parse hand-built IDX image fixture") {
  auto raw = image_fixture();
  auto arr = parse_idx(raw);
  CHECK(arr.dims == std::vector<std::uint32_t>{2, 2, 2});
  CHECK(arr.bytes == std::vector<std::uint8_t>{0, 1, 2, 3, 250, 251, 252, 255});
  CHECK(encode_idx(arr) == raw);
}

TEST_CASE("IDX label file") {
  std::vector<std::uint8_t> raw;
  put_u32(raw, 0x00000801);
  put_u32(raw, 3);
  for (std::uint8_t v : {7, 1, 9}) raw.push_back(v);
  auto arr = parse_idx(raw);
  CHECK(arr.dims == std::vector<std::uint32_t>{3});
  CHECK(arr.bytes == std::vector<std::uint8_t>{7, 1, 9});
}

TEST_CASE("IDX errors") {
  auto raw = image_fixture();
  auto bad = raw;
  bad[2] = 0x0D;
  CHECK_THROWS_WITH_AS(parse_idx(bad), doctest::Contains("offset 0"), DataError);
  auto truncated = raw;
  truncated.pop_back();
  CHECK_THROWS_WITH_AS(parse_idx(truncated), doctest::Contains("truncated"), DataError);
  CHECK_THROWS_AS(parse_idx(std::vector<std::uint8_t>{0, 0}), DataError);
  std::vector<std::uint8_t> huge;
  put_u32(huge, 0x00000803);
  put_u32(huge, 0xFFFFFFFF);
  put_u32(huge, 0xFFFFFFFF);
  put_u32(huge, 0xFFFFFFFF);
  CHECK_THROWS_AS(parse_idx(huge), DataError);
}

TEST_CASE("IDX write and read round-trip, plain and gzip") {
  std::mt19937_64 gen(1);
  IdxArray arr{{5, 4, 6}, {}};
  for (int i = 0; i < 120; ++i) arr.bytes.push_back(static_cast<std::uint8_t>(gen()));
  for (const char* name : {"rt.idx3", "rt.idx3.gz"}) {
    auto p = scratch(name);
    write_idx(p, arr);
    auto back = read_idx(p);
    CHECK(back.dims == arr.dims);
    CHECK(back.bytes == arr.bytes);
  }
  std::ifstream plain(scratch("rt.idx3"), std::ios::binary);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(plain)), {});
  CHECK(bytes == encode_idx(arr));
}

TEST_CASE("image dataset pairs images with labels") {
  auto img = scratch("imgs.idx3");
  auto lab = scratch("labs.idx1");
  write_idx(img, parse_idx(image_fixture()));
  write_idx(lab, IdxArray{{2}, {3, 8}});
  auto ds = read_image_dataset(img, lab);
  CHECK(ds.size() == 2);
  CHECK(ds.rows == 2);
  CHECK(ds.image(1)[3] == 255);
  CHECK(ds.labels[1] == 8);
  write_idx(lab, IdxArray{{3}, {3, 8, 1}});
  CHECK_THROWS_AS(read_image_dataset(img, lab), DataError);
  CHECK_THROWS_AS(read_image_dataset(scratch("missing.idx3"), lab), DataError);
}

TEST_CASE("preprocess_image examples") {
  std::vector<std::uint8_t> zero(28 * 28, 0);
  auto z = preprocess_image(zero);
  CHECK(z.size() == 196);
  for (double v : z) CHECK(v == 0.0);

  auto one = zero;
  one[13 * 28 + 6] = 255;
  auto o = preprocess_image(one);
  std::size_t hot = 0;
  for (std::size_t i = 0; i < o.size(); ++i)
    if (o[i] != 0.0) {
      ++hot;
      CHECK(o[i] == 1.0);
      CHECK(i == 6 * 14 + 3);
    }
  CHECK(hot == 1);
}

TEST_CASE("preprocess_image matches a naive pooling loop") {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::uint8_t> img(28 * 28);
    for (auto& v : img) v = static_cast<std::uint8_t>(gen());
    auto a = preprocess_image(img);
    auto b = oracle::max_pool(img, 28, 28);
    CHECK(a == b);
    for (double v : a) CHECK((v >= 0.0 && v <= 1.0));
  }
  CHECK_THROWS_AS(preprocess_image(std::vector<std::uint8_t>(27 * 27), 27, 27), std::invalid_argument);
  CHECK_THROWS_AS(preprocess_image(std::vector<std::uint8_t>(10)), std::invalid_argument);
}

TEST_CASE("tabular CSV fixture") {
  auto ds = parse_tabular_csv("a,b,label\n1.5,-2,0\n3,4e-1,1\n0,7,0\n");
  CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
  REQUIRE(ds.size() == 3);
  CHECK(ds.features[0] == std::vector<double>{1.5, -2.0});
  CHECK(ds.features[1] == std::vector<double>{3.0, 0.4});
  CHECK(ds.labels[1] == Label::anomalous);
  CHECK(ds.anomaly_count() == 1);
  auto middle = parse_tabular_csv("a,label,b\n1,1,2\n");
  CHECK(middle.features[0] == std::vector<double>{1.0, 2.0});
}

TEST_CASE("tabular CSV errors") {
  CHECK_THROWS_WITH_AS(parse_tabular_csv(""), doctest::Contains("empty"), DataError);
  CHECK_THROWS_WITH_AS(parse_tabular_csv("a,b\n1,2\n"), doctest::Contains("label"), DataError);
  CHECK_THROWS_WITH_AS(parse_tabular_csv("a,b,label\n1,x,0\n"), doctest::Contains(":2:"), DataError);
  CHECK_THROWS_WITH_AS(parse_tabular_csv("a,b,label\n1,x,0\n"), doctest::Contains("'b'"), DataError);
  CHECK_THROWS_AS(parse_tabular_csv("a,b,label\n1,2\n"), DataError);
  CHECK_THROWS_AS(parse_tabular_csv("a,b,label\n1,2,3\n"), DataError);
}

TEST_CASE("shipped datasets have the expected sizes") {
  const fs::path data = TNAD_DATA_DIR;
  if (fs::exists(data / "wine.csv")) {
    auto wine = read_tabular_csv(data / "wine.csv");
    CHECK(wine.size() == 129);
    CHECK(wine.feature_count() == 13);
    CHECK(wine.anomaly_count() == 10);
  }
  if (fs::exists(data / "glass.csv")) {
    auto glass = read_tabular_csv(data / "glass.csv");
    CHECK(glass.size() == 214);
    CHECK(glass.feature_count() == 9);
    CHECK(glass.anomaly_count() == 9);
  }
}

TEST_CASE("standardizer fits the training split only") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(4.0, 2.5);
  std::vector<std::vector<double>> train(50, std::vector<double>(3)), test(50, std::vector<double>(3));
  for (auto& r : train) {
    r[0] = n(gen);
    r[1] = 7.0;
    r[2] = n(gen) * 10;
  }
  for (auto& r : test) r = {n(gen) + 1.0, 7.0, n(gen)};
  auto s = Standardizer::fit(train);
  CHECK(s.constant_features == std::vector<std::size_t>{1});
  auto z = s.apply_all(train);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0, v = 0;
    for (auto& r : z) m += r[j];
    m /= 50;
    for (auto& r : z) v += (r[j] - m) * (r[j] - m);
    v /= 50;
    CHECK(std::abs(m) < 1e-9);
    if (j != 1) CHECK(std::abs(std::sqrt(v) - 1.0) < 1e-9);
  }
  auto zt = s.apply_all(test);
  double tm = 0;
  for (auto& r : zt) tm += r[0];
  CHECK(std::abs(tm / 50) > 0.05);

  auto p = scratch("std.csv");
  s.save(p);
  auto back = Standardizer::load(p);
  CHECK(back.mean == s.mean);
  CHECK(back.stddev == s.stddev);
  CHECK(back.constant_features == s.constant_features);
}
