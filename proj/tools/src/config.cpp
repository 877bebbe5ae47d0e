#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace tnad::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(const std::string& key, const std::string& reason) {
  throw ConfigError("config field '" + key + "': " + reason);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) fail(key, "expected a non-negative integer, got '" + v + "'");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(to_u64(key, v)); }

std::size_t to_positive(const std::string& key, const std::string& v) {
  auto n = to_size(key, v);
  if (n == 0) fail(key, "must be positive");
  return n;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
    fail(key, "expected a finite number, got '" + v + "'");
  return out;
}

std::optional<std::size_t> to_auto_size(const std::string& key, const std::string& v) {
  if (v == "auto") return std::nullopt;
  return to_positive(key, v);
}

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string opt(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "auto"; }

}  // namespace

ExperimentConfig parse_config(const std::string& text, const fs::path& base_dir) {
  ExperimentConfig c;
  auto path_of = [&](const std::string& v) {
    fs::path p(v);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };

  const std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters{
      {"name", [&](auto&, auto& v) { c.name = v; }},
      {"dataset",
       [&](auto& k, auto& v) {
         if (v == "tabular") c.kind = DatasetKind::tabular;
         else if (v == "images") c.kind = DatasetKind::images;
         else fail(k, "expected 'tabular' or 'images', got '" + v + "'");
       }},
      {"data", [&](auto&, auto& v) { c.data_path = path_of(v); }},
      {"train_images", [&](auto&, auto& v) { c.train_images = path_of(v); }},
      {"train_labels", [&](auto&, auto& v) { c.train_labels = path_of(v); }},
      {"test_images", [&](auto&, auto& v) { c.test_images = path_of(v); }},
      {"test_labels", [&](auto&, auto& v) { c.test_labels = path_of(v); }},
      {"inlier_class",
       [&](auto& k, auto& v) {
         auto n = to_size(k, v);
         if (n > 9) fail(k, "must be a digit class 0..9");
         c.inlier_class = static_cast<int>(n);
       }},
      {"train_split",
       [&](auto& k, auto& v) {
         if (v != "half" && v != "all") fail(k, "expected 'half' or 'all'");
         c.train_split = v;
       }},
      {"embedding",
       [&](auto& k, auto& v) {
         try {
           c.embedding = parse_embedding_kind(v);
         } catch (const std::exception& e) {
           fail(k, e.what());
         }
       }},
      {"N", [&](auto& k, auto& v) { c.sites = to_auto_size(k, v); }},
      {"p", [&](auto& k, auto& v) { c.physical_dim = to_auto_size(k, v); }},
      {"S", [&](auto& k, auto& v) { c.spacing = to_auto_size(k, v); }},
      {"b", [&](auto& k, auto& v) { c.bond_dim = to_positive(k, v); }},
      {"alpha", [&](auto& k, auto& v) { c.train.alpha = to_double(k, v); }},
      {"batch_size", [&](auto& k, auto& v) { c.train.batch_size = to_positive(k, v); }},
      {"cold_epochs", [&](auto& k, auto& v) { c.train.cold_epochs = to_size(k, v); }},
      {"cold_lr", [&](auto& k, auto& v) { c.train.cold_lr = to_double(k, v); }},
      {"main_epochs", [&](auto& k, auto& v) { c.train.main_epochs = to_size(k, v); }},
      {"main_lr", [&](auto& k, auto& v) { c.train.main_lr = to_double(k, v); }},
      {"decay_rate", [&](auto& k, auto& v) { c.train.decay_rate = to_double(k, v); }},
      {"init_stddev",
       [&](auto& k, auto& v) {
         if (v == "unit_fnorm") c.init_stddev.reset();
         else c.init_stddev = to_double(k, v);
       }},
      {"threads", [&](auto& k, auto& v) { c.train.threads = to_positive(k, v); }},
      {"seeds",
       [&](auto& k, auto& v) {
         c.seeds.clear();
         std::stringstream ss(v);
         for (std::string item; std::getline(ss, item, ',');) c.seeds.push_back(to_u64(k, trim(item)));
       }},
      {"max_retries",
       [&](auto& k, auto& v) {
         c.max_retries = to_size(k, v);
         if (c.max_retries > 3) fail(k, "at most 3 retries");
       }},
      {"out_dir", [&](auto&, auto& v) { c.out_dir = path_of(v); }},
      {"roc",
       [&](auto& k, auto& v) {
         if (v == "true") c.write_roc = true;
         else if (v == "false") c.write_roc = false;
         else fail(k, "expected 'true' or 'false'");
       }},
  };

  std::istringstream in(text);
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.rfind("manifest.", 0) == 0) {
      c.extra[key] = value;
      continue;
    }
    auto it = setters.find(key);
    if (it == setters.end()) fail(key, "unknown key");
    if (value.empty()) fail(key, "empty value");
    it->second(key, value);
  }

  if (c.seeds.empty()) fail("seeds", "at least one seed is required");
  if (c.init_stddev && !(*c.init_stddev > 0.0)) fail("init_stddev", "must be positive");
  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (c.kind == DatasetKind::tabular) {
    if (c.data_path.empty()) fail("data", "a tabular dataset needs a CSV path");
  } else {
    if (c.train_images.empty() || c.train_labels.empty() || c.test_images.empty() || c.test_labels.empty())
      fail("train_images", "an image dataset needs train_images, train_labels, test_images and test_labels");
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto abs = [](const fs::path& p) { return fs::absolute(p).lexically_normal().string(); };
  o << "name = " << c.name << "\n";
  if (c.kind == DatasetKind::tabular) {
    o << "dataset = tabular\n";
    o << "data = " << abs(c.data_path) << "\n";
    o << "train_split = " << c.train_split << "\n";
  } else {
    o << "dataset = images\n";
    o << "train_images = " << abs(c.train_images) << "\n";
    o << "train_labels = " << abs(c.train_labels) << "\n";
    o << "test_images = " << abs(c.test_images) << "\n";
    o << "test_labels = " << abs(c.test_labels) << "\n";
    o << "inlier_class = " << c.inlier_class << "\n";
  }
  o << "embedding = " << to_string(c.embedding) << "\n";
  o << "N = " << opt(c.sites) << "\n";
  o << "p = " << opt(c.physical_dim) << "\n";
  o << "b = " << c.bond_dim << "\n";
  o << "S = " << opt(c.spacing) << "\n";
  o << "alpha = " << num(c.train.alpha) << "\n";
  o << "batch_size = " << c.train.batch_size << "\n";
  o << "cold_epochs = " << c.train.cold_epochs << "\n";
  o << "cold_lr = " << num(c.train.cold_lr) << "\n";
  o << "main_epochs = " << c.train.main_epochs << "\n";
  o << "main_lr = " << num(c.train.main_lr) << "\n";
  o << "decay_rate = " << num(c.train.decay_rate) << "\n";
  o << "init_stddev = " << (c.init_stddev ? num(*c.init_stddev) : "unit_fnorm") << "\n";
  o << "threads = " << c.train.threads << "\n";
  o << "seeds = ";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) o << (i ? "," : "") << c.seeds[i];
  o << "\n";
  o << "max_retries = " << c.max_retries << "\n";
  if (!c.out_dir.empty()) o << "out_dir = " << abs(c.out_dir) << "\n";
  o << "roc = " << (c.write_roc ? "true" : "false") << "\n";
  for (const auto& [k, v] : c.extra) o << k << " = " << v << "\n";
  return o.str();
}

std::optional<std::size_t> auto_physical_dim(std::size_t sites, std::size_t spacing, EmbeddingKind kind) {
  const std::size_t q = (sites - 1) / spacing + 1;
  const double lo = 4.0 * std::log(10.0), hi = 12.0 * std::log(10.0);
  for (std::size_t p = 2; static_cast<double>(q) * std::log(static_cast<double>(p)) <= hi + 1e-12; ++p) {
    if (kind == EmbeddingKind::trigonometric && p % 2) continue;
    const double lw = static_cast<double>(q) * std::log(static_cast<double>(p));
    if (lw >= lo - 1e-12) return p;
  }
  return std::nullopt;
}

double unit_fnorm_stddev(const MpoShape& s) {
  // E||P||_F^2 = sigma^(2N) b^(N-1) p^(N+q)
  const double n = static_cast<double>(s.sites);
  const double log_count = (n - 1) * std::log(static_cast<double>(s.bond_dim)) +
                           (n + static_cast<double>(s.output_sites())) * std::log(static_cast<double>(s.physical_dim));
  return std::exp(-log_count / (2 * n));
}

Resolution resolve(const ExperimentConfig& cfg, std::size_t data_sites) {
  Resolution r;
  if (cfg.sites && *cfg.sites != data_sites)
    fail("N", "config has N = " + std::to_string(*cfg.sites) + " but the data has " + std::to_string(data_sites) +
                  " features");
  r.shape.sites = data_sites;
  r.shape.bond_dim = cfg.bond_dim;
  if (cfg.spacing) {
    r.shape.spacing = *cfg.spacing;
  } else {
    r.shape.spacing = data_sites / 25 + 1;
    r.notes.push_back("auto: S = " + std::to_string(r.shape.spacing) + " for N = " + std::to_string(data_sites));
  }
  if (cfg.physical_dim) {
    r.shape.physical_dim = *cfg.physical_dim;
  } else {
    auto p = auto_physical_dim(data_sites, r.shape.spacing, cfg.embedding);
    if (!p) fail("p", "no p gives 1e4 <= p^q <= 1e12 for q = " + std::to_string(r.shape.output_sites()));
    r.shape.physical_dim = *p;
    char buf[160];
    std::snprintf(buf, sizeof buf, "auto: p = %zu (q = %zu, dim W = %.3g)", *p, r.shape.output_sites(),
                  std::pow(static_cast<double>(*p), static_cast<double>(r.shape.output_sites())));
    r.notes.emplace_back(buf);
  }
  try {
    r.shape.validate();
    EmbeddingSpec{cfg.embedding, r.shape.physical_dim}.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.init_stddev) {
    r.init_stddev = *cfg.init_stddev;
  } else {
    r.init_stddev = unit_fnorm_stddev(r.shape);
    char buf[96];
    std::snprintf(buf, sizeof buf, "init_stddev = %.6g (unit expected F-norm)", r.init_stddev);
    r.notes.emplace_back(buf);
  }
  return r;
}

DetectorSettings detector_settings(const ExperimentConfig& cfg, const Resolution& res) {
  DetectorSettings s;
  s.physical_dim = res.shape.physical_dim;
  s.bond_dim = res.shape.bond_dim;
  s.spacing = res.shape.spacing;
  s.embedding = cfg.embedding;
  s.train = cfg.train;
  s.train.init_stddev = res.init_stddev;
  s.max_retries = cfg.max_retries;
  return s;
}

}  // namespace tnad::cli
