#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slsmpc/csv.hpp"
#include "slsmpc/error.hpp"

namespace slsmpc {

/// Per-view features, one column per sample (d x N, column-major).
/// Columns of samples unobserved in the view hold zeros and must not be read.
using FeatureMatrix = Eigen::MatrixXd;

/// Observation mask, M x N; entry (m, i) is true when sample i exists in view m.
using ViewMask = std::vector<std::vector<std::uint8_t>>;

class MultiViewDataset {
 public:
  MultiViewDataset() = default;

  MultiViewDataset(std::vector<FeatureMatrix> views, ViewMask mask,
                   std::optional<std::vector<int>> labels = std::nullopt)
      : views_(std::move(views)), mask_(std::move(mask)), labels_(std::move(labels)) {
    validate();
  }

  /// All views observed for every sample.
  static MultiViewDataset fully_observed(std::vector<FeatureMatrix> views,
                                         std::optional<std::vector<int>> labels = std::nullopt) {
    const auto n = views.empty() ? 0 : static_cast<std::size_t>(views.front().cols());
    ViewMask mask(views.size(), std::vector<std::uint8_t>(n, 1));
    return MultiViewDataset(std::move(views), std::move(mask), std::move(labels));
  }

  std::size_t n_samples() const { return views_.empty() ? 0 : static_cast<std::size_t>(views_.front().cols()); }
  std::size_t n_views() const { return views_.size(); }

  bool observed(std::size_t view, std::size_t sample) const { return mask_[view][sample] != 0; }
  const ViewMask& mask() const { return mask_; }
  const std::vector<std::uint8_t>& mask(std::size_t view) const { return mask_[view]; }

  /// Raw feature matrix, including the zeroed unobserved columns.
  const FeatureMatrix& features(std::size_t view) const { return views_[view]; }

  auto column(std::size_t view, std::size_t sample) const {
    assert(observed(view, sample) && "reading an unobserved feature column");
    return views_[view].col(static_cast<Eigen::Index>(sample));
  }

  const std::optional<std::vector<int>>& labels() const { return labels_; }

  std::size_t observed_count(std::size_t view) const {
    return static_cast<std::size_t>(std::count(mask_[view].begin(), mask_[view].end(), 1));
  }

  bool fully_observed() const {
    for (const auto& row : mask_)
      if (std::find(row.begin(), row.end(), 0) != row.end()) return false;
    return true;
  }

  void validate() const {
    if (views_.empty()) throw DataError("dataset has no views");
    const auto n = n_samples();
    for (std::size_t m = 0; m < views_.size(); ++m) {
      if (views_[m].rows() == 0) throw DataError("view " + std::to_string(m) + " has zero feature dimension");
      if (static_cast<std::size_t>(views_[m].cols()) != n) {
        throw DataError("shape mismatch: view " + std::to_string(m) + " has " +
                        std::to_string(views_[m].cols()) + " samples, view 0 has " + std::to_string(n));
      }
    }
    if (mask_.size() != views_.size()) throw DataError("mask has " + std::to_string(mask_.size()) + " rows, expected one per view");
    for (std::size_t m = 0; m < mask_.size(); ++m) {
      if (mask_[m].size() != n) throw DataError("mask row " + std::to_string(m) + " has wrong length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      bool any = false;
      for (std::size_t m = 0; m < mask_.size(); ++m) {
        if (!mask_[m][i]) continue;
        any = true;
        if (!views_[m].col(static_cast<Eigen::Index>(i)).allFinite()) {
          throw DataError("non-finite feature in view " + std::to_string(m) + ", sample " + std::to_string(i));
        }
      }
      if (!any) throw DataError("sample " + std::to_string(i) + " is observed in zero views");
    }
    if (labels_ && labels_->size() != n) {
      throw DataError("labels have length " + std::to_string(labels_->size()) + ", expected " + std::to_string(n));
    }
  }

  friend bool operator==(const MultiViewDataset&, const MultiViewDataset&) = default;

 private:
  std::vector<FeatureMatrix> views_;
  ViewMask mask_;
  std::optional<std::vector<int>> labels_;
};

enum class DatasetFormat { csv_per_view, json_manifest };

namespace detail {

inline FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
  auto rows = csv::read_numeric(path);
  if (rows.empty()) throw DataError(path.string() + ": empty feature file");
  FeatureMatrix mat(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      mat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return mat;
}

inline void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& mat) {
  auto out = csv::open_out(path);
  for (Eigen::Index r = 0; r < mat.rows(); ++r) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
      if (c) out << ',';
      out << csv::format_double(mat(r, c));
    }
    out << '\n';
  }
}

}  // namespace detail

/// Reads labels either as a flat list of integers (one row, one field per
/// sample) or as a partition file with a "sample_index,label" header.
inline std::vector<int> read_labels(const std::filesystem::path& path) {
  auto rows = csv::read_rows(path);
  std::vector<int> labels;
  if (!rows.empty() && rows.front().size() == 2 && rows.front()[0] == "sample_index") {
    std::vector<std::pair<long long, int>> entries;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].size() != 2) throw DataError(path.string() + ": partition rows need two fields");
      entries.emplace_back(csv::parse_int(rows[r][0], path.string()),
                           static_cast<int>(csv::parse_int(rows[r][1], path.string())));
    }
    labels.assign(entries.size(), 0);
    std::vector<bool> seen(entries.size(), false);
    for (auto [idx, lab] : entries) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= labels.size() || seen[static_cast<std::size_t>(idx)]) {
        throw DataError(path.string() + ": bad or duplicate sample index " + std::to_string(idx));
      }
      seen[static_cast<std::size_t>(idx)] = true;
      labels[static_cast<std::size_t>(idx)] = lab;
    }
    return labels;
  }
  for (const auto& row : rows)
    for (const auto& f : row) labels.push_back(static_cast<int>(csv::parse_int(f, path.string())));
  return labels;
}

inline void write_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  auto out = csv::open_out(path);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out << ',';
    out << labels[i];
  }
  out << '\n';
}

inline ViewMask read_mask(const std::filesystem::path& path) {
  auto rows = csv::read_rows(path);
  ViewMask mask;
  for (const auto& row : rows) {
    std::vector<std::uint8_t> r;
    r.reserve(row.size());
    for (const auto& f : row) {
      auto v = csv::parse_int(f, path.string());
      if (v != 0 && v != 1) throw DataError(path.string() + ": mask entries must be 0 or 1");
      r.push_back(static_cast<std::uint8_t>(v));
    }
    mask.push_back(std::move(r));
  }
  return mask;
}

inline void write_mask(const std::filesystem::path& path, const ViewMask& mask) {
  auto out = csv::open_out(path);
  for (const auto& row : mask) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << static_cast<int>(row[i]);
    }
    out << '\n';
  }
}

/// Loads views from explicit CSV paths; mask all-true unless given.
inline MultiViewDataset load_views(const std::vector<std::filesystem::path>& view_paths,
                                   const std::optional<std::filesystem::path>& mask_path = std::nullopt,
                                   const std::optional<std::filesystem::path>& label_path = std::nullopt) {
  if (view_paths.empty()) throw DataError("no view files given");
  std::vector<FeatureMatrix> views;
  for (const auto& p : view_paths) views.push_back(detail::read_feature_csv(p));
  std::optional<std::vector<int>> labels;
  if (label_path) labels = read_labels(*label_path);
  if (!mask_path) {
    // shape check happens in the constructor, but the all-true mask needs a length
    for (std::size_t m = 1; m < views.size(); ++m) {
      if (views[m].cols() != views[0].cols()) {
        throw DataError("shape mismatch: view " + std::to_string(m) + " has " + std::to_string(views[m].cols()) +
                        " samples, view 0 has " + std::to_string(views[0].cols()));
      }
    }
    return MultiViewDataset::fully_observed(std::move(views), std::move(labels));
  }
  auto mask = read_mask(*mask_path);
  if (mask.size() == views.size()) {
    for (std::size_t m = 0; m < views.size(); ++m) {
      if (mask[m].size() != static_cast<std::size_t>(views[m].cols())) continue;
      for (std::size_t i = 0; i < mask[m].size(); ++i)
        if (!mask[m][i]) views[m].col(static_cast<Eigen::Index>(i)).setZero();
    }
  }
  return MultiViewDataset(std::move(views), std::move(mask), std::move(labels));
}

/// Manifest keys: "views" (array of CSV paths), optional "mask" and "labels".
/// Relative paths resolve against the manifest's directory.
inline MultiViewDataset load_manifest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest '" + manifest_path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("manifest '" + manifest_path.string() + "': " + e.what());
  }
  const auto base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  if (!j.contains("views") || !j["views"].is_array()) throw DataError("manifest lacks a \"views\" array");
  std::vector<std::filesystem::path> views;
  for (const auto& v : j["views"]) views.push_back(resolve(v.get<std::string>()));
  std::optional<std::filesystem::path> mask, labels;
  if (j.contains("mask") && !j["mask"].is_null()) mask = resolve(j["mask"].get<std::string>());
  if (j.contains("labels") && !j["labels"].is_null()) labels = resolve(j["labels"].get<std::string>());
  return load_views(views, mask, labels);
}

/// csv_per_view: `path` is a directory holding view_0.csv, view_1.csv, ...
/// and optionally labels.csv. json_manifest: `path` is the manifest file.
inline MultiViewDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  if (format == DatasetFormat::json_manifest) return load_manifest(path);
  std::vector<std::filesystem::path> views;
  for (std::size_t m = 0;; ++m) {
    auto p = path / ("view_" + std::to_string(m) + ".csv");
    if (!std::filesystem::exists(p)) break;
    views.push_back(p);
  }
  if (views.empty()) throw DataError("no view_0.csv in '" + path.string() + "'");
  std::optional<std::filesystem::path> labels;
  if (std::filesystem::exists(path / "labels.csv")) labels = path / "labels.csv";
  return load_views(views, std::nullopt, labels);
}

/// Writes view_<m>.csv, mask.csv, labels.csv (if present) and manifest.json
/// into `dir`. Returns the manifest path.
inline std::filesystem::path save_dataset(const MultiViewDataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["views"] = nlohmann::json::array();
  for (std::size_t m = 0; m < ds.n_views(); ++m) {
    auto name = "view_" + std::to_string(m) + ".csv";
    detail::write_feature_csv(dir / name, ds.features(m));
    manifest["views"].push_back(name);
  }
  write_mask(dir / "mask.csv", ds.mask());
  manifest["mask"] = "mask.csv";
  if (ds.labels()) {
    write_labels(dir / "labels.csv", *ds.labels());
    manifest["labels"] = "labels.csv";
  }
  auto out = csv::open_out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  return dir / "manifest.json";
}

/// Paired-sample missing-view protocol for two-view data: ceil(c*N) samples
/// keep both views; of the rest, floor(R/2) lose view 0 and the remainder
/// lose view 1. Sample selection is a seeded random permutation.
inline MultiViewDataset apply_missing_protocol(const MultiViewDataset& ds, double paired_fraction, std::uint64_t seed) {
  if (!(paired_fraction > 0.0 && paired_fraction <= 1.0)) {
    throw ArgumentError("paired fraction must lie in (0, 1], got " + std::to_string(paired_fraction));
  }
  if (ds.n_views() != 2) throw ArgumentError("missing-view protocol needs exactly 2 views");
  if (!ds.fully_observed()) throw ArgumentError("missing-view protocol needs a fully observed dataset");
  const auto n = ds.n_samples();
  // guard against c*N landing a hair above an integer
  auto paired = static_cast<std::size_t>(std::ceil(paired_fraction * static_cast<double>(n) - 1e-9));
  paired = std::min(paired, n);
  const auto rest = n - paired;
  const auto lose_first = rest / 2;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<FeatureMatrix> views{ds.features(0), ds.features(1)};
  ViewMask mask = ds.mask();
  for (std::size_t r = paired; r < n; ++r) {
    const std::size_t view = (r - paired) < lose_first ? 0 : 1;
    const auto i = order[r];
    mask[view][i] = 0;
    views[view].col(static_cast<Eigen::Index>(i)).setZero();
  }
  return MultiViewDataset(std::move(views), std::move(mask), ds.labels());
}

/// Four-view incomplete protocol: views 0 and 1 stay complete; a seeded half of
/// the samples lose view 2 and the other half lose view 3 (odd N: the extra
/// sample loses view 3).
inline MultiViewDataset apply_four_view_protocol(const MultiViewDataset& ds, std::uint64_t seed) {
  if (ds.n_views() != 4) throw ArgumentError("four-view protocol needs exactly 4 views");
  if (!ds.fully_observed()) throw ArgumentError("four-view protocol needs a fully observed dataset");
  const auto n = ds.n_samples();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<FeatureMatrix> views;
  for (std::size_t m = 0; m < 4; ++m) views.push_back(ds.features(m));
  ViewMask mask = ds.mask();
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t view = r < n / 2 ? 2 : 3;
    mask[view][order[r]] = 0;
    views[view].col(static_cast<Eigen::Index>(order[r])).setZero();
  }
  return MultiViewDataset(std::move(views), std::move(mask), ds.labels());
}

struct SynthSpec {
  std::size_t n_clusters = 4;
  std::size_t per_cluster = 50;
  std::vector<std::size_t> dims{8, 8};
  double separation = 10.0;
  double noise = 0.5;
  std::uint64_t seed = 0;
};

/// Gaussian blobs per view: cluster centers uniform on a sphere of radius
/// `separation`, samples center + N(0, noise^2). Samples are cluster-major,
/// label = index / per_cluster.
inline MultiViewDataset synth_gaussian(const SynthSpec& spec) {
  if (spec.n_clusters == 0 || spec.per_cluster == 0) throw ArgumentError("cluster counts must be positive");
  if (spec.dims.empty()) throw ArgumentError("need at least one view");
  if (!(spec.separation > 0.0)) throw ArgumentError("separation must be positive");
  if (spec.noise < 0.0) throw ArgumentError("noise must be nonnegative");
  for (auto d : spec.dims)
    if (d == 0) throw ArgumentError("degenerate view dimension 0");

  const auto n = spec.n_clusters * spec.per_cluster;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<FeatureMatrix> views;
  for (auto d : spec.dims) {
    const auto dim = static_cast<Eigen::Index>(d);
    FeatureMatrix centers(dim, static_cast<Eigen::Index>(spec.n_clusters));
    for (Eigen::Index c = 0; c < centers.cols(); ++c) {
      Eigen::VectorXd dir(dim);
      do {
        for (Eigen::Index r = 0; r < dim; ++r) dir(r) = gauss(rng);
      } while (dir.norm() < 1e-12);
      centers.col(c) = dir.normalized() * spec.separation;
    }
    FeatureMatrix x(dim, static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<Eigen::Index>(i / spec.per_cluster);
      for (Eigen::Index r = 0; r < dim; ++r) {
        x(r, static_cast<Eigen::Index>(i)) = centers(r, c) + spec.noise * gauss(rng);
      }
    }
    views.push_back(std::move(x));
  }
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i / spec.per_cluster);
  return MultiViewDataset::fully_observed(std::move(views), std::move(labels));
}

}  // namespace slsmpc
