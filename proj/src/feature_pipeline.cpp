#include "rlff/feature_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <regex>
#include <sstream>

#include "rlff/io.hpp"

namespace rlff {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

struct Candidate {
  std::size_t target = 0;
  double distance = 0.0;
};

// Per reference keypoint: the accepted candidate in each other view, if any.
using ReferenceMatches = std::vector<std::pair<ViewIndex, Candidate>>;

ReferenceMatches match_reference(const Keypoint& ref, ViewIndex ref_view,
                                 const PerViewKeypoints& views, const MatchConfig& cfg) {
  ReferenceMatches out;
  for (const auto& [view, kps] : views) {
    if (view == ref_view || kps.empty()) continue;
    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    for (std::size_t n = 0; n < kps.size(); ++n) {
      const double d = descriptor_distance(ref.descriptor, kps[n].descriptor);
      if (d < best) {
        second = best;
        best = d;
        best_idx = n;
      } else if (d < second) {
        second = d;
      }
    }
    if (!(best < cfg.abs_threshold)) continue;
    if (kps.size() > 1 && !(best < cfg.ratio * second)) continue;
    out.push_back({view, {best_idx, best}});
  }
  return out;
}

// Resolves keypoints claimed by several references and assembles tracks.
std::vector<FeatureTrack> assemble_tracks(const PerViewKeypoints& views, ViewIndex ref_view,
                                          const std::vector<ReferenceMatches>& matches,
                                          const MatchConfig& cfg) {
  struct Owner {
    std::size_t ref = 0;
    double distance = 0.0;
  };
  std::map<std::pair<ViewIndex, std::size_t>, Owner> owners;
  for (std::size_t r = 0; r < matches.size(); ++r) {
    for (const auto& [view, cand] : matches[r]) {
      const auto key = std::make_pair(view, cand.target);
      auto it = owners.find(key);
      if (it == owners.end()) {
        owners.emplace(key, Owner{r, cand.distance});
      } else if (cand.distance < it->second.distance ||
                 (cand.distance == it->second.distance && r < it->second.ref)) {
        it->second = Owner{r, cand.distance};
      }
    }
  }

  const std::vector<Keypoint>& refs = views.at(ref_view);
  std::vector<FeatureTrack> tracks;
  for (std::size_t r = 0; r < matches.size(); ++r) {
    FeatureTrack track;
    track.id = static_cast<std::int64_t>(r);
    bool placed_ref = false;
    for (const auto& [view, cand] : matches[r]) {
      if (!placed_ref && ref_view < view) {
        track.reference = track.keypoints.size();
        track.keypoints.push_back(refs[r]);
        placed_ref = true;
      }
      if (owners.at({view, cand.target}).ref != r) continue;
      track.keypoints.push_back(views.at(view)[cand.target]);
    }
    if (!placed_ref) {
      track.reference = track.keypoints.size();
      track.keypoints.push_back(refs[r]);
    }
    if (static_cast<int>(track.keypoints.size()) >= cfg.min_views) tracks.push_back(std::move(track));
  }
  return tracks;
}

}  // namespace

void normalize_descriptor(std::vector<float>& d, bool root) {
  if (root) {
    double l1 = 0.0;
    for (float x : d) l1 += std::abs(x);
    if (l1 == 0.0) return;
    for (float& x : d) {
      const double v = x / l1;
      x = static_cast<float>(std::copysign(std::sqrt(std::abs(v)), v));
    }
    return;
  }
  double l2 = 0.0;
  for (float x : d) l2 += static_cast<double>(x) * x;
  if (l2 == 0.0) return;
  const double inv = 1.0 / std::sqrt(l2);
  for (float& x : d) x = static_cast<float>(x * inv);
}

double descriptor_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw FormatError("descriptor length mismatch");
  double sum = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double d = static_cast<double>(a[n]) - b[n];
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::vector<Keypoint> parse_keypoint_file(std::istream& in, ViewIndex view, const std::string& source,
                                          const IngestOptions& opts) {
  std::vector<Keypoint> out;
  std::string line;
  std::size_t line_no = 0;
  long expected = -1;
  long dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (expected < 0) {
      if (tokens.size() != 2) throw ParseError(source, line_no, "header must be `N d`");
      expected = parse_int(tokens[0], source, line_no);
      dim = parse_int(tokens[1], source, line_no);
      if (expected < 0 || dim < 0) throw ParseError(source, line_no, "negative count in header");
      out.reserve(static_cast<std::size_t>(expected));
      continue;
    }
    if (static_cast<long>(out.size()) == expected) {
      throw ParseError(source, line_no, "more rows than the header declares");
    }
    if (tokens.size() != static_cast<std::size_t>(4 + dim)) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(4 + dim) + " fields, got " +
                           std::to_string(tokens.size()));
    }
    Keypoint kp;
    kp.i = view.i;
    kp.j = view.j;
    kp.k = parse_double(tokens[0], source, line_no);
    kp.l = parse_double(tokens[1], source, line_no);
    kp.scale = parse_double(tokens[2], source, line_no);
    kp.orientation = parse_double(tokens[3], source, line_no);
    kp.descriptor.resize(static_cast<std::size_t>(dim));
    for (long n = 0; n < dim; ++n) {
      kp.descriptor[static_cast<std::size_t>(n)] =
          static_cast<float>(parse_double(tokens[static_cast<std::size_t>(4 + n)], source, line_no));
    }
    normalize_descriptor(kp.descriptor, opts.root_sift);
    out.push_back(std::move(kp));
  }
  if (expected >= 0 && static_cast<long>(out.size()) != expected) {
    throw ParseError(source, line_no, "header declares " + std::to_string(expected) + " rows, found " +
                                          std::to_string(out.size()));
  }
  return out;
}

PerViewKeypoints ingest_keypoints(const std::filesystem::path& dir, const GridDims& dims,
                                  const IngestOptions& opts) {
  if (!std::filesystem::is_directory(dir)) {
    throw FormatError("keypoint directory not found: " + dir.string());
  }
  static const std::regex kName(R"(view_(\d+)_(\d+)\.txt)");
  PerViewKeypoints views;
  std::size_t dim = 0;
  bool have_dim = false;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, kName)) continue;
    const ViewIndex view{std::stoi(m[1].str()), std::stoi(m[2].str())};
    if (view.i >= dims.ni || view.j >= dims.nj) {
      throw BoundsError(name + ": view outside the " + std::to_string(dims.ni) + "x" +
                        std::to_string(dims.nj) + " grid");
    }
    std::ifstream in(entry.path());
    if (!in) throw FormatError("cannot open " + entry.path().string());
    auto kps = parse_keypoint_file(in, view, entry.path().string(), opts);
    for (const Keypoint& kp : kps) {
      if (!have_dim) {
        dim = kp.descriptor.size();
        have_dim = true;
      } else if (kp.descriptor.size() != dim) {
        throw FormatError(name + ": descriptor length differs from the rest of the dataset");
      }
    }
    views.emplace(view, std::move(kps));
  }
  return views;
}

void write_keypoint_file(const std::filesystem::path& path, std::span<const Keypoint> keypoints,
                         int descriptor_length) {
  std::ostringstream os;
  os << keypoints.size() << ' ' << descriptor_length << '\n';
  char buf[128];
  for (const Keypoint& kp : keypoints) {
    if (static_cast<int>(kp.descriptor.size()) != descriptor_length) {
      throw FormatError("descriptor length mismatch while writing " + path.string());
    }
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.9g %.9g", kp.k, kp.l, kp.scale, kp.orientation);
    os << buf;
    for (float x : kp.descriptor) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(x));
      os << buf;
    }
    os << '\n';
  }
  write_file_atomic(path, os.str());
}

void write_keypoint_files(const std::filesystem::path& dir, const PerViewKeypoints& views,
                          int descriptor_length) {
  std::filesystem::create_directories(dir);
  for (const auto& [view, kps] : views) {
    const auto name = "view_" + std::to_string(view.i) + "_" + std::to_string(view.j) + ".txt";
    write_keypoint_file(dir / name, kps, descriptor_length);
  }
}

ViewIndex reference_view(const PerViewKeypoints& views, const GridDims& dims) {
  const ViewIndex centre{dims.ni / 2, dims.nj / 2};
  auto it = views.find(centre);
  if (it != views.end() && !it->second.empty()) return centre;
  ViewIndex best = centre;
  long best_d2 = std::numeric_limits<long>::max();
  for (const auto& [view, kps] : views) {
    if (kps.empty()) continue;
    const long di = view.i - centre.i;
    const long dj = view.j - centre.j;
    const long d2 = di * di + dj * dj;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = view;
    }
  }
  return best;
}

std::vector<FeatureTrack> match_across_views_serial(const PerViewKeypoints& views,
                                                    const GridDims& dims, const MatchConfig& cfg) {
  const ViewIndex ref_view = reference_view(views, dims);
  const auto it = views.find(ref_view);
  if (it == views.end() || it->second.empty()) return {};
  const std::vector<Keypoint>& refs = it->second;

  std::vector<ReferenceMatches> matches(refs.size());
  for (std::size_t r = 0; r < refs.size(); ++r) {
    matches[r] = match_reference(refs[r], ref_view, views, cfg);
  }
  return assemble_tracks(views, ref_view, matches, cfg);
}

std::vector<FeatureTrack> match_across_views(const PerViewKeypoints& views, const GridDims& dims,
                                             const MatchConfig& cfg) {
  const ViewIndex ref_view = reference_view(views, dims);
  const auto it = views.find(ref_view);
  if (it == views.end() || it->second.empty()) return {};
  const std::vector<Keypoint>& refs = it->second;

  std::vector<ReferenceMatches> matches(refs.size());
  const auto n = static_cast<std::ptrdiff_t>(refs.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    try {
      const auto k = static_cast<std::size_t>(r);
      matches[k] = match_reference(refs[k], ref_view, views, cfg);
    } catch (...) {
#pragma omp critical(rlff_match_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return assemble_tracks(views, ref_view, matches, cfg);
}

ObservationSet track_to_observations(const FeatureTrack& track, const LFIntrinsics& intr) {
  ObservationSet obs;
  obs.id = track.id;
  obs.rays.reserve(track.keypoints.size());
  obs.samples.reserve(track.keypoints.size());
  for (const Keypoint& kp : track.keypoints) {
    const DiscreteSample n{kp.i, kp.j, kp.k, kp.l};
    obs.rays.push_back(decode_sample(n, intr));
    obs.samples.push_back(n);
  }
  return obs;
}

std::vector<ObservationSet> tracks_to_observations(std::span<const FeatureTrack> tracks,
                                                   const LFIntrinsics& intr) {
  std::vector<ObservationSet> out;
  out.reserve(tracks.size());
  for (const FeatureTrack& t : tracks) out.push_back(track_to_observations(t, intr));
  return out;
}

std::vector<PipelineResult> run_pipeline(const PerViewKeypoints& views, const LFIntrinsics& intr,
                                         const PipelineConfig& cfg) {
  std::vector<FeatureTrack> tracks = match_across_views(views, intr.dims(), cfg.match);

  std::vector<PipelineResult> out(tracks.size());
  std::vector<ObservationSet> batch;
  std::vector<std::size_t> batch_slot;
  for (std::size_t n = 0; n < tracks.size(); ++n) {
    out[n].track = tracks[n];
    try {
      batch.push_back(track_to_observations(tracks[n], intr));
      batch_slot.push_back(n);
    } catch (const Error& e) {
      out[n].extraction = Rejection{tracks[n].id, RejectReason::kGeometry, e.what()};
    }
  }

  // extract_batch sorts by id; track ids are unique and increasing, so slots line up.
  std::vector<Extraction> extracted = extract_batch(batch, intr, cfg.estimator);
  for (std::size_t n = 0; n < extracted.size(); ++n) {
    out[batch_slot[n]].extraction = std::move(extracted[n]);
  }
  return out;
}

std::vector<PipelineResult> run_pipeline(const std::filesystem::path& keypoint_dir,
                                         const LFIntrinsics& intr, const PipelineConfig& cfg) {
  return run_pipeline(ingest_keypoints(keypoint_dir, intr.dims(), cfg.ingest), intr, cfg);
}

}  // namespace rlff
