#include "commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "tnad/model_io.hpp"

namespace tnad::cli {

namespace fs = std::filesystem;

namespace {

struct LoadedData {
  TabularDataset tabular;
  ImageDataset train_images, test_images;
  std::size_t sites = 0;
};

std::vector<std::pair<std::string, fs::path>> input_files(const ExperimentConfig& cfg) {
  if (cfg.kind == DatasetKind::tabular) return {{"data", cfg.data_path}};
  return {{"train_images", cfg.train_images},
          {"train_labels", cfg.train_labels},
          {"test_images", cfg.test_images},
          {"test_labels", cfg.test_labels}};
}

/// Empty string when every input exists.
std::string missing_input(const ExperimentConfig& cfg) {
  for (const auto& [key, path] : input_files(cfg))
    if (!fs::is_regular_file(path)) return key + " = " + path.string();
  return {};
}

LoadedData load_data(const ExperimentConfig& cfg, bool need_test) {
  LoadedData d;
  if (cfg.kind == DatasetKind::tabular) {
    d.tabular = read_tabular_csv(cfg.data_path);
    if (d.tabular.size() == 0) throw DataError(cfg.data_path.string() + ": no rows");
    d.sites = d.tabular.feature_count();
  } else {
    d.train_images = read_image_dataset(cfg.train_images, cfg.train_labels);
    if (need_test) d.test_images = read_image_dataset(cfg.test_images, cfg.test_labels);
    if (d.train_images.rows % 2 || d.train_images.cols % 2)
      throw DataError("image size must be even for 2x2 pooling");
    d.sites = (d.train_images.rows / 2) * (d.train_images.cols / 2);
  }
  return d;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

/// Config with every `auto` replaced by its resolved value, plus provenance keys.
ExperimentConfig manifest_of(ExperimentConfig cfg, const Resolution& res, const std::vector<std::uint64_t>& seeds) {
  cfg.sites = res.shape.sites;
  cfg.physical_dim = res.shape.physical_dim;
  cfg.spacing = res.shape.spacing;
  cfg.init_stddev = res.init_stddev;
  cfg.seeds = seeds;
  cfg.extra.clear();
  cfg.extra["manifest.format_version"] = std::to_string(kModelFormatVersion);
  for (const auto& [key, path] : input_files(cfg)) cfg.extra["manifest.sha1." + key] = git_blob_sha1(path);
  return cfg;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Prepared {
  ExperimentConfig cfg;
  LoadedData data;
  Resolution res;
  fs::path out_dir;
};

/// Shared front half of train and evaluate. Returns an exit code on failure.
int prepare(const fs::path& config, const RunOptions& opts, bool need_test, Streams io, Prepared& p) {
  try {
    p.cfg = load_config(config);
    if (opts.seeds) {
      if (opts.seeds->empty()) throw ConfigError("--seeds: at least one seed is required");
      p.cfg.seeds = *opts.seeds;
    }
    if (auto miss = missing_input(p.cfg); !miss.empty()) {
      io.err << "error: dataset file not found: " << miss << "\n";
      return kExitUsage;
    }
    p.data = load_data(p.cfg, need_test);
    p.res = resolve(p.cfg, p.data.sites);
  } catch (const ConfigError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitData;
  }
  for (const auto& note : p.res.notes) io.err << note << "\n";
  p.out_dir = output_dir(opts, p.cfg);
  std::error_code ec;
  fs::create_directories(p.out_dir, ec);
  if (ec) {
    io.err << "error: cannot create output directory " << p.out_dir << ": " << ec.message() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

fs::path output_dir(const RunOptions& opts, const ExperimentConfig& cfg) {
  if (opts.out_dir) return *opts.out_dir;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "tnad_out";
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  ExperimentConfig probe = parse_config("data = x\nseeds = " + text + "\n");
  return probe.seeds;
}

int cmd_train(const fs::path& config, const RunOptions& opts, Streams io) {
  Prepared p;
  if (int rc = prepare(config, opts, false, io, p)) return rc;
  const auto& cfg = p.cfg;
  const std::uint64_t seed = cfg.seeds.front();
  const DetectorSettings settings = detector_settings(cfg, p.res);

  std::vector<std::vector<double>> rows;
  try {
    if (cfg.kind == DatasetKind::tabular) {
      const auto& ds = p.data.tabular;
      if (cfg.train_split == "half") {
        for (auto i : split_normals(ds, seed).train) rows.push_back(ds.features[i]);
      } else {
        for (std::size_t i = 0; i < ds.size(); ++i)
          if (ds.labels[i] == Label::normal) rows.push_back(ds.features[i]);
      }
      if (rows.empty()) throw DataError("no normal rows to train on");
      const auto standardizer = Standardizer::fit(rows);
      rows = standardizer.apply_all(rows);
      standardizer.save(p.out_dir / "standardizer.csv");
    } else {
      const auto& imgs = p.data.train_images;
      for (std::size_t i = 0; i < imgs.size(); ++i)
        if (imgs.labels[i] == cfg.inlier_class) rows.push_back(preprocess_image(imgs.image(i), imgs.rows, imgs.cols));
      if (rows.empty()) throw DataError("no training images of class " + std::to_string(cfg.inlier_class));
    }
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitData;
  }

  std::ofstream history(p.out_dir / "history.log");
  std::size_t attempts = 0;
  std::size_t attempt_no = 0;
  std::optional<TrainResult> trained;
  try {
    trained = train_with_retries(rows, p.data.sites, settings, seed, attempts, [&](const EpochRecord& r) {
      if (r.epoch == 1) {
        ++attempt_no;
        if (attempt_no > 1) {
          history.close();
          history.open(p.out_dir / "history.log", std::ios::trunc);
          io.err << "retrying with seed " << attempt_seed(seed, attempt_no - 1) << "\n";
        }
      }
      history << format_epoch(r) << "\n";
    });
  } catch (const NanAbort& e) {
    history.flush();
    io.err << "error: NaN abort at epoch " << e.epoch << " step " << e.step << ": " << e.what() << "\n";
    return kExitNanAbort;
  }
  history.flush();
  const TrainResult& result = *trained;
  if (result.clamped_samples) io.err << "warning: " << result.clamped_samples << " zero-norm samples clamped\n";

  try {
    save_model(p.out_dir / "model.tnad", result.model, settings.embedding_spec());
    auto manifest = manifest_of(cfg, p.res, {seed});
    manifest.extra["manifest.train_seed"] = std::to_string(attempt_seed(seed, attempts - 1));
    manifest.extra["manifest.attempts"] = std::to_string(attempts);
    write_text(p.out_dir / "manifest.cfg", format_config(manifest));
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitData;
  }
  io.out << "model written to " << (p.out_dir / "model.tnad").string() << " (" << result.history.size()
         << " epochs)\n";
  return kExitOk;
}

int cmd_score(const fs::path& model_path, const fs::path& data, const std::optional<fs::path>& standardizer,
              Streams io) {
  try {
    if (!fs::is_regular_file(data)) {
      io.err << "error: data file not found: " << data.string() << "\n";
      return kExitUsage;
    }
    const SavedModel saved = load_model(model_path);
    std::vector<std::vector<double>> rows;
    if (data.extension() == ".csv") {
      rows = read_tabular_csv(data).features;
      std::optional<fs::path> std_path = standardizer;
      if (!std_path) {
        auto sibling = model_path.parent_path() / "standardizer.csv";
        if (fs::is_regular_file(sibling)) std_path = sibling;
      }
      if (std_path) {
        auto s = Standardizer::load(*std_path);
        if (s.mean.size() != saved.model.shape().sites)
          throw DataError("standardizer has " + std::to_string(s.mean.size()) + " features, model has N = " +
                          std::to_string(saved.model.shape().sites));
        for (const auto& r : rows)
          if (r.size() != s.mean.size())
            throw DataError("sample has " + std::to_string(r.size()) + " features, model has N = " +
                            std::to_string(saved.model.shape().sites));
        rows = s.apply_all(rows);
      }
    } else {
      const IdxArray arr = read_idx(data);
      if (arr.dims.size() != 3) throw DataError(data.string() + ": expected a 3-dimensional IDX image file");
      const std::size_t r = arr.dims[1], c = arr.dims[2];
      for (std::size_t i = 0; i < arr.dims[0]; ++i)
        rows.push_back(preprocess_image(std::span(arr.bytes).subspan(i * r * c, r * c), r, c));
    }
    const auto scores = score_samples(saved.model, saved.embedding, rows);
    char buf[64];
    for (std::size_t i = 0; i < scores.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, scores[i]);
      io.out << buf;
    }
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int cmd_evaluate(const fs::path& config, const RunOptions& opts, Streams io) {
  Prepared p;
  if (int rc = prepare(config, opts, true, io, p)) return rc;
  const auto& cfg = p.cfg;
  const DetectorSettings settings = detector_settings(cfg, p.res);
  const std::size_t n = cfg.seeds.size();

  struct Trial {
    std::optional<RunResult> result;
    std::string failure;
    bool data_error = false;
  };
  std::vector<Trial> trials(n);
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;

  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      const auto seed = cfg.seeds[i];
      try {
        trials[i].result = cfg.kind == DatasetKind::tabular
                               ? run_odds(p.data.tabular, settings, seed)
                               : run_one_class_image(p.data.train_images, p.data.test_images, cfg.inlier_class,
                                                     settings, seed);
        std::lock_guard lock(log_mu);
        io.err << "seed " << seed << ": auroc " << fmt("%.4f", trials[i].result->auroc) << " ("
               << fmt("%.1f", trials[i].result->wall_seconds) << " s)\n";
      } catch (const NanAbort& e) {
        trials[i].failure = "NaN abort at epoch " + std::to_string(e.epoch) + " step " + std::to_string(e.step);
      } catch (const std::exception& e) {
        trials[i].failure = e.what();
        trials[i].data_error = true;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, n));
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
  }

  const std::string dataset = cfg.name;
  const std::string inlier = cfg.kind == DatasetKind::images ? std::to_string(cfg.inlier_class) : "-";
  std::ostringstream csv;
  csv << kResultsHeader << "\n";
  std::vector<double> aurocs;
  std::size_t failed = 0;
  bool any_data_error = false;
  for (std::size_t i = 0; i < n; ++i) {
    const auto seed = cfg.seeds[i];
    const auto& t = trials[i];
    if (!t.result) {
      ++failed;
      any_data_error = any_data_error || t.data_error;
      io.err << "seed " << seed << " failed: " << t.failure << "\n";
      continue;
    }
    const auto& r = *t.result;
    aurocs.push_back(r.auroc);
    csv << format_result_row(dataset, inlier, seed, r.auroc, r.n_train, r.n_test, r.epochs, r.wall_seconds) << "\n";
    std::ostringstream hist;
    for (const auto& rec : r.history) hist << format_epoch(rec) << "\n";
    write_text(p.out_dir / ("history_seed" + std::to_string(seed) + ".log"), hist.str());
    if (cfg.write_roc) {
      std::ostringstream roc;
      roc << "fpr,tpr\n";
      for (const auto& pt : roc_curve(r.scored)) roc << fmt("%.17g", pt.fpr) << "," << fmt("%.17g", pt.tpr) << "\n";
      write_text(p.out_dir / ("roc_seed" + std::to_string(seed) + ".csv"), roc.str());
    }
  }
  write_text(p.out_dir / "results.csv", csv.str());
  write_text(p.out_dir / "manifest.cfg", format_config(manifest_of(cfg, p.res, cfg.seeds)));

  const auto summary = summarize_trials(aurocs, failed);
  std::ostringstream line;
  line << dataset << ": mean AUROC " << fmt("%.4f", summary.mean) << " +- " << fmt("%.4f", summary.std_error)
       << " over " << summary.succeeded << " seed" << (summary.succeeded == 1 ? "" : "s");
  if (failed) line << " (" << failed << " failed and excluded)";
  line << "\n";
  write_text(p.out_dir / "summary.txt", line.str());
  io.out << line.str();

  if (aurocs.empty()) {
    io.err << "error: all " << n << " trials failed\n";
    return any_data_error ? kExitData : kExitAllFailed;
  }
  return kExitOk;
}

int cmd_inspect(const fs::path& model_path, Streams io) {
  try {
    const SavedModel saved = load_model(model_path);
    const auto& sh = saved.model.shape();
    std::size_t params = 0;
    for (const auto& c : saved.model.cores()) params += c.size();
    const auto fn = fnorm_log(saved.model);
    io.out << "format_version " << kModelFormatVersion << "\n"
           << "N " << sh.sites << "\n"
           << "p " << sh.physical_dim << "\n"
           << "b " << sh.bond_dim << "\n"
           << "S " << sh.spacing << "\n"
           << "q " << sh.output_sites() << "\n"
           << "embedding " << to_string(saved.embedding.kind) << "\n"
           << "parameters " << params << "\n"
           << "fnorm_log " << (fn.is_zero ? std::string("-inf") : fmt("%.10g", fn.value)) << "\n";
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace tnad::cli
