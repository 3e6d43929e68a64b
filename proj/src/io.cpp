#include "rlff/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

namespace rlff {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double number_at(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw FormatError(std::string("missing numeric key `") + key + "`");
  }
  return j.at(key).get<double>();
}

int int_at(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) {
    throw FormatError(std::string("missing integer key `") + key + "`");
  }
  return j.at(key).get<int>();
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

long parse_int(std::string_view token, const std::string& source, std::size_t line) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(source, line, "not an integer: `" + std::string(token) + "`");
  }
  return value;
}

double parse_double(std::string_view token, const std::string& source, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
    throw ParseError(source, line, "not a finite number: `" + std::string(token) + "`");
  }
  return value;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw FormatError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw FormatError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LFIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("intrinsics must be a JSON object");
  if (!j.contains("M") || !j.at("M").is_array() || j.at("M").size() != 25) {
    throw FormatError("intrinsics key `M` must hold 25 numbers");
  }
  LFIntrinsics::Matrix5d m;
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) {
      const auto& v = j.at("M").at(static_cast<std::size_t>(5 * r + c));
      if (!v.is_number()) throw FormatError("intrinsics `M` entries must be numbers");
      m(r, c) = v.get<double>();
    }
  }
  const GridDims dims{int_at(j, "Ni"), int_at(j, "Nj"), int_at(j, "Nk"), int_at(j, "Nl")};
  const double d = j.contains("D") ? number_at(j, "D") : kDefaultPlaneSeparation;
  return LFIntrinsics(m, d, dims);
}

nlohmann::ordered_json intrinsics_to_json(const LFIntrinsics& intr) {
  nlohmann::ordered_json j;
  auto m = nlohmann::ordered_json::array();
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) m.push_back(intr.matrix()(r, c));
  }
  j["M"] = std::move(m);
  j["D"] = intr.plane_separation();
  j["Ni"] = intr.dims().ni;
  j["Nj"] = intr.dims().nj;
  j["Nk"] = intr.dims().nk;
  j["Nl"] = intr.dims().nl;
  return j;
}

LFIntrinsics load_intrinsics(const std::filesystem::path& path) {
  try {
    return intrinsics_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<SceneFeature> scene_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw FormatError("scene must be a JSON array");
  std::vector<SceneFeature> scene;
  std::set<std::int64_t> seen;
  for (std::size_t n = 0; n < j.size(); ++n) {
    const auto& rec = j.at(n);
    if (!rec.is_object()) throw FormatError("scene entry " + std::to_string(n) + " is not an object");
    SceneFeature f;
    f.id = rec.contains("id") ? rec.at("id").get<std::int64_t>() : static_cast<std::int64_t>(n);
    f.model = {number_at(rec, "Px"),  number_at(rec, "Py"),     number_at(rec, "Pz1"),
               number_at(rec, "Pz2"), number_at(rec, "theta1"), number_at(rec, "theta2")};
    f.model.validate();
    if (!seen.insert(f.id).second) throw FormatError("duplicate scene id " + std::to_string(f.id));
    scene.push_back(f);
  }
  return scene;
}

nlohmann::ordered_json scene_to_json(std::span<const SceneFeature> scene) {
  auto arr = nlohmann::ordered_json::array();
  for (const SceneFeature& f : scene) {
    nlohmann::ordered_json rec;
    rec["id"] = f.id;
    rec["Px"] = f.model.px;
    rec["Py"] = f.model.py;
    rec["Pz1"] = f.model.pz1;
    rec["Pz2"] = f.model.pz2;
    rec["theta1"] = f.model.theta1;
    rec["theta2"] = f.model.theta2;
    arr.push_back(std::move(rec));
  }
  return arr;
}

std::vector<SceneFeature> load_scene(const std::filesystem::path& path) {
  try {
    return scene_from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string format_observation_csv(std::span<const ObservationSet> sets) {
  std::string out = "feature_id,i,j,s,t,u,v\n";
  for (const ObservationSet& obs : sets) {
    for (std::size_t n = 0; n < obs.rays.size(); ++n) {
      const Ray4D& r = obs.rays[n];
      const DiscreteSample& smp = obs.samples[n];
      out += std::to_string(obs.id) + ',' + std::to_string(smp.i) + ',' + std::to_string(smp.j) + ',' +
             format_double(r.s) + ',' + format_double(r.t) + ',' + format_double(r.u) + ',' +
             format_double(r.v) + '\n';
    }
  }
  return out;
}

std::vector<ObservationSet> parse_observation_csv(std::istream& in, const std::string& source,
                                                  const LFIntrinsics* intr) {
  std::map<std::int64_t, ObservationSet> sets;
  std::map<std::int64_t, std::set<std::pair<int, int>>> views_seen;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    const auto fields = split_csv(body);
    if (first) {
      first = false;
      if (fields.front() == "feature_id") continue;
    }
    if (columns == 0) {
      if (fields.size() != 7 && fields.size() != 5) {
        throw ParseError(source, line_no, "expected 7 (continuous) or 5 (discrete) fields, got " +
                                              std::to_string(fields.size()));
      }
      columns = fields.size();
      if (columns == 5 && intr == nullptr) {
        throw ParseError(source, line_no, "discrete observation rows need an intrinsics file");
      }
    } else if (fields.size() != columns) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(columns) + " fields, got " + std::to_string(fields.size()));
    }

    const std::int64_t id = parse_int(fields[0], source, line_no);
    const int i = static_cast<int>(parse_int(fields[1], source, line_no));
    const int j = static_cast<int>(parse_int(fields[2], source, line_no));
    if (intr != nullptr && !intr->contains_view(i, j)) {
      throw ParseError(source, line_no, "view outside the grid");
    }
    if (!views_seen[id].insert({i, j}).second) {
      throw ParseError(source, line_no, "feature " + std::to_string(id) + " observed twice in one view");
    }

    ObservationSet& obs = sets[id];
    obs.id = id;
    if (columns == 7) {
      const Ray4D ray{parse_double(fields[3], source, line_no), parse_double(fields[4], source, line_no),
                      parse_double(fields[5], source, line_no), parse_double(fields[6], source, line_no)};
      DiscreteSample smp{i, j, 0.0, 0.0};
      if (intr != nullptr) {
        const Eigen::Vector2d kl = intr->pixel_for(i, j, ray.u, ray.v);
        smp.k = kl.x();
        smp.l = kl.y();
      }
      obs.rays.push_back(ray);
      obs.samples.push_back(smp);
    } else {
      const DiscreteSample smp{i, j, parse_double(fields[3], source, line_no),
                               parse_double(fields[4], source, line_no)};
      if (!intr->contains(smp)) throw ParseError(source, line_no, "sample outside the grid");
      obs.rays.push_back(decode_sample(smp, *intr));
      obs.samples.push_back(smp);
    }
  }
  std::vector<ObservationSet> out;
  out.reserve(sets.size());
  for (auto& [id, obs] : sets) out.push_back(std::move(obs));
  return out;
}

RlffRecord to_record(const ExtractedFeature& f) {
  RlffRecord r;
  r.id = f.id;
  r.rlff = f.rlff;
  r.diagnostics = f.diagnostics;
  r.feature_class = f.feature_class;
  return r;
}

CharacteristicPoints to_characteristic_points(const RlffRecord& r) {
  CharacteristicPoints cp;
  cp.id = r.id;
  cp.feature_class = r.feature_class;
  if (r.feature_class == FeatureClass::kLambertian) {
    cp.c1 = cp.c2 = {r.rlff.px, r.rlff.py, 0.5 * (r.rlff.pz1 + r.rlff.pz2)};
  } else {
    cp.c1 = {r.rlff.px, r.rlff.py, r.rlff.pz1};
    cp.c2 = {r.rlff.px, r.rlff.py, r.rlff.pz2};
  }
  cp.descriptor = r.descriptor;
  cp.scale = r.scale;
  cp.orientation = r.orientation;
  return cp;
}

nlohmann::ordered_json record_to_json(const RlffRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["Px"] = r.rlff.px;
  j["Py"] = r.rlff.py;
  j["Pz1"] = r.rlff.pz1;
  j["Pz2"] = r.rlff.pz2;
  j["theta1"] = r.rlff.theta1;
  j["theta2"] = r.rlff.theta2;
  j["rms_residual"] = r.diagnostics.rms_residual;
  j["asymmetry"] = r.diagnostics.asymmetry;
  j["r_squared"] = r.diagnostics.r_squared;
  j["n_views"] = r.diagnostics.n_views;
  j["class"] = std::string(to_string(r.feature_class));
  if (!r.descriptor.empty()) {
    j["scale"] = r.scale;
    j["orientation"] = r.orientation;
    j["descriptor"] = r.descriptor;
  }
  return j;
}

RlffRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("RLFF record must be a JSON object");
  RlffRecord r;
  if (!j.contains("id") || !j.at("id").is_number_integer()) throw FormatError("missing integer key `id`");
  r.id = j.at("id").get<std::int64_t>();
  r.rlff = {number_at(j, "Px"),  number_at(j, "Py"),     number_at(j, "Pz1"),
            number_at(j, "Pz2"), number_at(j, "theta1"), number_at(j, "theta2")};
  r.diagnostics.rms_residual = number_at(j, "rms_residual");
  r.diagnostics.asymmetry = number_at(j, "asymmetry");
  r.diagnostics.r_squared = number_at(j, "r_squared");
  r.diagnostics.n_views = int_at(j, "n_views");
  r.diagnostics.interval_length = r.rlff.interval_length();
  if (!j.contains("class") || !j.at("class").is_string()) throw FormatError("missing key `class`");
  const std::string cls = j.at("class").get<std::string>();
  if (cls == "lambertian") {
    r.feature_class = FeatureClass::kLambertian;
  } else if (cls == "refracted") {
    r.feature_class = FeatureClass::kRefracted;
  } else {
    throw FormatError("unknown class `" + cls + "`");
  }
  if (j.contains("descriptor")) r.descriptor = j.at("descriptor").get<std::vector<float>>();
  if (j.contains("scale")) r.scale = number_at(j, "scale");
  if (j.contains("orientation")) r.orientation = number_at(j, "orientation");
  return r;
}

std::vector<RlffRecord> parse_rlff_jsonl(std::istream& in, const std::string& source) {
  std::vector<RlffRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const FormatError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return out;
}

std::string json_line(const nlohmann::ordered_json& j) { return j.dump() + "\n"; }

}  // namespace rlff
