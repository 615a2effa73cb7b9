#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnfmig/mdn.hpp"
#include "vnfmig/rng.hpp"

namespace vnfmig {

inline constexpr int kWindowSamples = 32;          // displacements per feature window
inline constexpr int kMinSegmentSamples = 34;      // one window plus one target
inline constexpr double kEarthRadiusM = 6371000.0;

struct GpsPoint {
  double lat = 0.0;
  double lon = 0.0;
  double alt = 0.0;       // kept from the source, unused downstream
  double timestamp = 0.0; // seconds since the Unix epoch
};

struct RawTrajectory {
  std::string source_id;
  std::vector<GpsPoint> points;
};

struct PltParseResult {
  std::vector<RawTrajectory> trajectories;  // split at timestamp violations
  int total_records = 0;
  int skipped_records = 0;
};

namespace detail {

/// Days since 1970-01-01 for a proleptic Gregorian date.
inline long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

inline bool parse_plt_timestamp(const std::string& date, const std::string& time,
                                double& out) {
  int y, mo, d, h, mi, s;
  if (std::sscanf(date.c_str(), "%d-%d-%d", &y, &mo, &d) != 3) return false;
  if (std::sscanf(time.c_str(), "%d:%d:%d", &h, &mi, &s) != 3) return false;
  if (mo < 1 || mo > 12 || d < 1 || d > 31) return false;
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return false;
  out = static_cast<double>(days_from_civil(y, static_cast<unsigned>(mo),
                                            static_cast<unsigned>(d))) * 86400.0 +
        h * 3600.0 + mi * 60.0 + s;
  return true;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end != s.c_str() && std::isfinite(out);
}

}  // namespace detail

/// Parse one PLT file (6 header lines, then records of
/// latitude, longitude, 0, altitude-ft, fractional-days, date, time).
/// Malformed records are skipped and counted; a non-increasing timestamp
/// closes the running trajectory and starts a new one.
inline PltParseResult parse_plt(const std::string& content,
                                const std::string& source_id = "") {
  PltParseResult result;
  std::stringstream ss(content);
  std::string line;
  int line_no = 0;
  RawTrajectory current;
  current.source_id = source_id;
  auto flush = [&]() {
    if (!current.points.empty()) {
      result.trajectories.push_back(std::move(current));
      current = RawTrajectory{};
      current.source_id = source_id;
    }
  };
  while (std::getline(ss, line)) {
    ++line_no;
    if (line_no <= 6) continue;  // header
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++result.total_records;
    auto fields = detail::split_csv(line);
    GpsPoint p;
    bool ok = fields.size() >= 7 && detail::parse_double(fields[0], p.lat) &&
              detail::parse_double(fields[1], p.lon) &&
              detail::parse_double(fields[3], p.alt) &&
              detail::parse_plt_timestamp(fields[5], fields[6], p.timestamp);
    ok = ok && p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
    if (!ok) {
      ++result.skipped_records;
      continue;
    }
    if (!current.points.empty() && p.timestamp <= current.points.back().timestamp)
      flush();
    current.points.push_back(p);
  }
  flush();
  return result;
}

/// Uniform-rate planar position series.
struct TrajectorySegment {
  std::string parent_id;
  double interval_s = 60.0;
  std::vector<Eigen::Vector2d> positions;

  int size() const { return static_cast<int>(positions.size()); }
};

/// Local equirectangular projection about the trajectory's first point and
/// linear resampling onto a uniform grid. Time gaps wider than
/// gap_factor * interval split the trajectory.
inline std::vector<TrajectorySegment> project_and_resample(const RawTrajectory& raw,
                                                           double target_interval_s,
                                                           double gap_factor = 5.0) {
  if (target_interval_s <= 0.0)
    throw std::invalid_argument("project_and_resample: interval must be > 0");
  std::vector<TrajectorySegment> out;
  if (raw.points.size() < 2) return out;

  const double lat0 = raw.points.front().lat;
  const double lon0 = raw.points.front().lon;
  const double deg = std::numbers::pi / 180.0;
  const double cos_lat0 = std::cos(lat0 * deg);
  auto project = [&](const GpsPoint& p) -> Eigen::Vector2d {
    return {kEarthRadiusM * (p.lon - lon0) * deg * cos_lat0,
            kEarthRadiusM * (p.lat - lat0) * deg};
  };

  // split at gaps, then resample each chunk
  std::vector<std::pair<std::size_t, std::size_t>> chunks;  // [first, last]
  std::size_t first = 0;
  for (std::size_t i = 1; i < raw.points.size(); ++i) {
    if (raw.points[i].timestamp - raw.points[i - 1].timestamp >
        gap_factor * target_interval_s) {
      if (i - first >= 2) chunks.emplace_back(first, i - 1);
      first = i;
    }
  }
  if (raw.points.size() - first >= 2) chunks.emplace_back(first, raw.points.size() - 1);

  int chunk_no = 0;
  for (auto [lo, hi] : chunks) {
    TrajectorySegment seg;
    seg.parent_id = raw.source_id + "#" + std::to_string(chunk_no++);
    seg.interval_s = target_interval_s;
    const double t0 = raw.points[lo].timestamp;
    const double t_end = raw.points[hi].timestamp;
    std::size_t cursor = lo;
    for (long k = 0;; ++k) {
      const double t = t0 + static_cast<double>(k) * target_interval_s;
      if (t > t_end + 1e-9) break;
      while (cursor < hi && raw.points[cursor + 1].timestamp < t) ++cursor;
      const GpsPoint& a = raw.points[cursor];
      const GpsPoint& b = raw.points[std::min(cursor + 1, hi)];
      double span = b.timestamp - a.timestamp;
      double w = span > 0.0 ? std::clamp((t - a.timestamp) / span, 0.0, 1.0) : 0.0;
      Eigen::Vector2d pa = project(a), pb = project(b);
      seg.positions.push_back(pa + w * (pb - pa));
    }
    if (seg.size() >= 2) out.push_back(std::move(seg));
  }
  return out;
}

struct SpeedFilterConfig {
  double vmax_mps = 2.5;
  double percentile = 0.95;
};

/// Keep a segment iff its percentile per-step speed is within vmax
/// (nearest-rank percentile, so occasional GPS glitches don't discard an
/// otherwise pedestrian trace).
inline bool speed_filter_keep(const TrajectorySegment& seg,
                              const SpeedFilterConfig& cfg = {}) {
  if (seg.size() < 2) return true;
  std::vector<double> speeds;
  speeds.reserve(seg.positions.size() - 1);
  for (std::size_t i = 1; i < seg.positions.size(); ++i)
    speeds.push_back((seg.positions[i] - seg.positions[i - 1]).norm() / seg.interval_s);
  std::sort(speeds.begin(), speeds.end());
  auto rank = static_cast<std::size_t>(
      std::ceil(cfg.percentile * static_cast<double>(speeds.size())));
  rank = std::clamp<std::size_t>(rank, 1, speeds.size());
  return speeds[rank - 1] <= cfg.vmax_mps;
}

struct StationarityConfig {
  double mean_factor = 0.5;   // halves' mean gap limit, in pooled stds
  double var_ratio_low = 0.5;
  double var_ratio_high = 2.0;
  double target_pass_rate = 0.92;
  int min_samples = 64;
};

/// Split-half stationarity heuristic on the differenced series: the two
/// halves must have close means and comparable variances in both
/// coordinates.
inline bool stationarity_pass(const TrajectorySegment& seg,
                              const StationarityConfig& cfg = {}) {
  const int n = seg.size() - 1;  // deltas
  if (n < 4) return true;
  for (int coord = 0; coord < 2; ++coord) {
    std::vector<double> d(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      d[static_cast<std::size_t>(i)] =
          seg.positions[static_cast<std::size_t>(i) + 1](coord) -
          seg.positions[static_cast<std::size_t>(i)](coord);
    int half = n / 2;
    auto stats = [&](int lo, int hi) {
      double mean = 0.0;
      for (int i = lo; i < hi; ++i) mean += d[static_cast<std::size_t>(i)];
      mean /= (hi - lo);
      double var = 0.0;
      for (int i = lo; i < hi; ++i) {
        double e = d[static_cast<std::size_t>(i)] - mean;
        var += e * e;
      }
      var /= (hi - lo);
      return std::pair<double, double>(mean, var);
    };
    auto [m1, v1] = stats(0, half);
    auto [m2, v2] = stats(half, n);
    double pooled = std::sqrt(0.5 * (v1 + v2));
    if (std::abs(m1 - m2) > cfg.mean_factor * pooled + 1e-12) return false;
    double ratio = (v1 + 1e-12) / (v2 + 1e-12);
    if (ratio < cfg.var_ratio_low || ratio > cfg.var_ratio_high) return false;
  }
  return true;
}

/// Recursively bisect until the emitted set reaches the target pass rate.
/// Failing segments too short to split into min_samples halves are
/// discarded.
inline std::vector<TrajectorySegment> segment_for_stationarity(
    const TrajectorySegment& seg, const StationarityConfig& cfg = {}) {
  std::vector<TrajectorySegment> cur{seg};
  for (;;) {
    if (cur.empty()) return cur;
    int passed = 0;
    std::vector<bool> flags(cur.size());
    for (std::size_t i = 0; i < cur.size(); ++i) {
      flags[i] = stationarity_pass(cur[i], cfg);
      passed += flags[i] ? 1 : 0;
    }
    if (static_cast<double>(passed) >= cfg.target_pass_rate * static_cast<double>(cur.size()))
      return cur;
    std::vector<TrajectorySegment> next;
    bool changed = false;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (flags[i]) {
        next.push_back(std::move(cur[i]));
      } else if (cur[i].size() >= 2 * cfg.min_samples) {
        auto mid = cur[i].positions.begin() +
                   static_cast<std::ptrdiff_t>(cur[i].positions.size() / 2);
        TrajectorySegment left{cur[i].parent_id + "L", cur[i].interval_s,
                               {cur[i].positions.begin(), mid}};
        TrajectorySegment right{cur[i].parent_id + "R", cur[i].interval_s,
                                {mid, cur[i].positions.end()}};
        next.push_back(std::move(left));
        next.push_back(std::move(right));
        changed = true;
      } else {
        changed = true;  // failing and unsplittable: discard
      }
    }
    if (!changed) return cur;
    cur = std::move(next);
  }
}

/// Sliding stride-1 windows of kWindowSamples displacements with the next
/// displacement as the target; a segment of length n yields n - 33 rows.
inline TrainingData make_windows(const TrajectorySegment& seg) {
  TrainingData data;
  const int n = seg.size();
  const int count = n - (kWindowSamples + 2) + 1;
  if (count <= 0) {
    data.X.resize(0, 2 * kWindowSamples);
    data.Y.resize(0, 2);
    return data;
  }
  data.X.resize(count, 2 * kWindowSamples);
  data.Y.resize(count, 2);
  for (int i = 0; i < count; ++i) {
    for (int k = 0; k < kWindowSamples; ++k) {
      Eigen::Vector2d d = seg.positions[static_cast<std::size_t>(i + k + 1)] -
                          seg.positions[static_cast<std::size_t>(i + k)];
      data.X(i, 2 * k) = d.x();
      data.X(i, 2 * k + 1) = d.y();
    }
    Eigen::Vector2d t = seg.positions[static_cast<std::size_t>(i + kWindowSamples + 1)] -
                        seg.positions[static_cast<std::size_t>(i + kWindowSamples)];
    data.Y(i, 0) = t.x();
    data.Y(i, 1) = t.y();
  }
  return data;
}

inline TrainingData concat_windows(const std::vector<TrajectorySegment>& segments) {
  Eigen::Index total = 0;
  for (const auto& s : segments)
    total += std::max(0, s.size() - (kWindowSamples + 1));
  TrainingData data;
  data.X.resize(total, 2 * kWindowSamples);
  data.Y.resize(total, 2);
  Eigen::Index row = 0;
  for (const auto& s : segments) {
    TrainingData part = make_windows(s);
    if (part.size() == 0) continue;
    data.X.middleRows(row, part.size()) = part.X;
    data.Y.middleRows(row, part.size()) = part.Y;
    row += part.size();
  }
  return data;
}

struct DatasetSplit {
  std::vector<TrajectorySegment> train;
  std::vector<TrajectorySegment> validation;
  double train_fraction = 0.9;
};

/// Deterministic seeded split by segment count.
inline DatasetSplit split_dataset(std::vector<TrajectorySegment> segments,
                                  double train_fraction, std::uint64_t seed) {
  if (train_fraction < 0.0 || train_fraction > 1.0)
    throw std::invalid_argument("split_dataset: fraction outside [0,1]");
  Pcg32 rng(mix64(seed, 0x73706c69ULL));
  auto order = shuffled_indices(segments.size(), rng);
  DatasetSplit split;
  split.train_fraction = train_fraction;
  auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(segments.size())));
  for (std::size_t i = 0; i < segments.size(); ++i) {
    auto& dst = i < n_train ? split.train : split.validation;
    dst.push_back(std::move(segments[order[i]]));
  }
  return split;
}

/// Random walk whose step distribution is the given mixture; the ground
/// truth motion generator of the simulator.
inline TrajectorySegment synthesize_trajectory(const MixtureParams& kernel, int steps,
                                               Eigen::Vector2d start, Pcg32& rng,
                                               double interval_s = 60.0) {
  if (steps < 1) throw std::invalid_argument("synthesize_trajectory: steps must be >= 1");
  kernel.validate();
  TrajectorySegment seg;
  seg.parent_id = "synthetic";
  seg.interval_s = interval_s;
  seg.positions.reserve(static_cast<std::size_t>(steps) + 1);
  seg.positions.push_back(start);
  Eigen::Vector2d pos = start;
  for (int i = 0; i < steps; ++i) {
    pos += sample_mixture(kernel, rng);
    seg.positions.push_back(pos);
  }
  return seg;
}

// ---------------------------------------------------------------------------
// Dataset file: one record per segment,
//   segment_id,interval_s,n,x0,y0,x1,y1,...
// with a versioned header line. Values use %.17g so a rerun of the same
// pipeline is byte-identical.
// ---------------------------------------------------------------------------

inline constexpr const char* kDatasetMagic = "# vnfmig-dataset-v1";

inline void save_dataset(const std::string& path,
                         const std::vector<TrajectorySegment>& segments) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
  os << kDatasetMagic << '\n';
  char buf[32];
  for (const auto& s : segments) {
    os << s.parent_id << ',';
    std::snprintf(buf, sizeof buf, "%.17g", s.interval_s);
    os << buf << ',' << s.size();
    for (const auto& p : s.positions) {
      std::snprintf(buf, sizeof buf, "%.17g", p.x());
      os << ',' << buf;
      std::snprintf(buf, sizeof buf, "%.17g", p.y());
      os << ',' << buf;
    }
    os << '\n';
  }
  if (!os) throw std::runtime_error("save_dataset: write failed for " + path);
}

inline std::vector<TrajectorySegment> load_dataset(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || line != kDatasetMagic)
    throw std::runtime_error("load_dataset: bad header in " + path);
  std::vector<TrajectorySegment> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = detail::split_csv(line);
    if (fields.size() < 3) throw std::runtime_error("load_dataset: short record");
    TrajectorySegment seg;
    seg.parent_id = fields[0];
    seg.interval_s = std::stod(fields[1]);
    int n = std::stoi(fields[2]);
    if (static_cast<int>(fields.size()) != 3 + 2 * n)
      throw std::runtime_error("load_dataset: record length mismatch");
    seg.positions.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      seg.positions.emplace_back(std::stod(fields[static_cast<std::size_t>(3 + 2 * i)]),
                                 std::stod(fields[static_cast<std::size_t>(4 + 2 * i)]));
    out.push_back(std::move(seg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Whole-directory pipeline: parse -> project/resample -> speed filter ->
// stationarity segmentation -> length filter. Stage statistics feed the
// preprocess manifest.
// ---------------------------------------------------------------------------

struct PipelineConfig {
  double resample_interval_s = 60.0;
  double gap_factor = 5.0;
  SpeedFilterConfig speed;
  StationarityConfig stationarity;
};

struct PipelineStats {
  int files_seen = 0;
  int files_parsed = 0;
  int records_total = 0;
  int records_skipped = 0;
  int raw_trajectories = 0;
  int resampled_segments = 0;
  int speed_dropped = 0;
  int stationarity_emitted = 0;
  int stationarity_passed = 0;
  int short_dropped = 0;
  int final_segments = 0;
  Eigen::Index total_windows = 0;

  double stationarity_pass_rate() const {
    return stationarity_emitted > 0
               ? static_cast<double>(stationarity_passed) / stationarity_emitted
               : 1.0;
  }
};

struct PipelineResult {
  std::vector<TrajectorySegment> segments;
  PipelineStats stats;
};

inline PipelineResult run_pipeline(const std::string& input_dir,
                                   const PipelineConfig& cfg = {}) {
  namespace fs = std::filesystem;
  PipelineResult result;
  if (!fs::exists(input_dir) || !fs::is_directory(input_dir))
    throw std::runtime_error("run_pipeline: no such directory: " + input_dir);

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(input_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".plt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  result.stats.files_seen = static_cast<int>(files.size());

  for (const auto& path : files) {
    std::ifstream is(path);
    if (!is) continue;
    std::stringstream buffer;
    buffer << is.rdbuf();
    PltParseResult parsed = parse_plt(buffer.str(), path.filename().string());
    ++result.stats.files_parsed;
    result.stats.records_total += parsed.total_records;
    result.stats.records_skipped += parsed.skipped_records;
    result.stats.raw_trajectories += static_cast<int>(parsed.trajectories.size());

    for (const auto& raw : parsed.trajectories) {
      auto resampled = project_and_resample(raw, cfg.resample_interval_s, cfg.gap_factor);
      result.stats.resampled_segments += static_cast<int>(resampled.size());
      for (auto& seg : resampled) {
        if (!speed_filter_keep(seg, cfg.speed)) {
          ++result.stats.speed_dropped;
          continue;
        }
        auto pieces = segment_for_stationarity(seg, cfg.stationarity);
        for (auto& piece : pieces) {
          ++result.stats.stationarity_emitted;
          if (stationarity_pass(piece, cfg.stationarity))
            ++result.stats.stationarity_passed;
          if (piece.size() < kMinSegmentSamples) {
            ++result.stats.short_dropped;
            continue;
          }
          result.stats.total_windows += piece.size() - (kWindowSamples + 1);
          result.segments.push_back(std::move(piece));
        }
      }
    }
  }
  result.stats.final_segments = static_cast<int>(result.segments.size());
  return result;
}

}  // namespace vnfmig
