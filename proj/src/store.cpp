#include "beltpick/store.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "beltpick/error.hpp"

namespace beltpick {

namespace fs = std::filesystem;

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559, "IEEE float32 required");

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string magic() {
    need(4);
    std::string m = bytes_.substr(pos_, 4);
    pos_ += 4;
    return m;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) throw Error(Errc::kTruncatedFile, "file ends early");
  }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void check_payload(const Reader& r, std::uint64_t floats) {
  if (r.remaining() != floats * 4)
    throw Error(Errc::kTruncatedFile, "payload holds " + std::to_string(r.remaining()) + " bytes, expected " +
                                          std::to_string(floats * 4));
}

Json pose_json(const RigidPose& pose) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back({pose.rotation(r, 0), pose.rotation(r, 1), pose.rotation(r, 2)});
  return {{"rotation", rows}, {"center", to_json(pose.center)}};
}

Vec3 vec3_from(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::kInvalidArgument, "expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

RigidPose pose_from(const Json& j) {
  RigidPose pose;
  const Json& rows = j.at("rotation");
  if (!rows.is_array() || rows.size() != 3) throw Error(Errc::kInvalidArgument, "rotation must be 3x3");
  for (int r = 0; r < 3; ++r) {
    const Vec3 row = vec3_from(rows[r]);
    pose.rotation.row(r) = row.transpose();
  }
  pose.center = vec3_from(j.at("center"));
  pose.validate();
  return pose;
}

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_vec3(const Json& j, const char* key, Vec3& out) {
  if (j.contains(key)) out = vec3_from(j.at(key));
}

Json intrinsics_json(const CameraIntrinsics& c) {
  return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
}

CameraIntrinsics intrinsics_from(const Json& j) {
  CameraIntrinsics c;
  read_opt(j, "fx", c.fx);
  read_opt(j, "fy", c.fy);
  read_opt(j, "cx", c.cx);
  read_opt(j, "cy", c.cy);
  read_opt(j, "width", c.width);
  read_opt(j, "height", c.height);
  c.validate();
  return c;
}

BeltConfig belt_from(const Json& j) {
  BeltConfig b;
  read_opt(j, "speed", b.speed);
  read_vec3(j, "direction", b.direction);
  read_opt(j, "timestep", b.timestep);
  if (j.contains("reconstruction_zone")) {
    read_vec3(j.at("reconstruction_zone"), "lo", b.reconstruction_zone.lo);
    read_vec3(j.at("reconstruction_zone"), "hi", b.reconstruction_zone.hi);
  }
  read_opt(j, "suction_zone_begin", b.suction_zone_begin);
  read_opt(j, "suction_zone_end", b.suction_zone_end);
  b.validate();
  return b;
}

GridSpec grid_from(const Json& j) {
  GridSpec g;
  read_vec3(j, "origin", g.origin);
  read_opt(j, "voxel_size", g.voxel_size);
  read_opt(j, "dims", g.dims);
  read_opt(j, "truncation", g.truncation);
  g.validate();
  return g;
}

Json cup_json(const SuctionCupSpec& c) {
  return {{"cup_radius", c.cup_radius},           {"ring_samples", c.ring_samples},
          {"flexibility", c.flexibility},         {"collision_radius", c.collision_radius},
          {"collision_height", c.collision_height}, {"torque_limit", c.torque_limit},
          {"gravity", c.gravity},                 {"standoff", c.standoff}};
}

SuctionCupSpec cup_from(const Json& j) {
  SuctionCupSpec c;
  read_opt(j, "cup_radius", c.cup_radius);
  read_opt(j, "ring_samples", c.ring_samples);
  read_opt(j, "flexibility", c.flexibility);
  read_opt(j, "collision_radius", c.collision_radius);
  read_opt(j, "collision_height", c.collision_height);
  read_opt(j, "torque_limit", c.torque_limit);
  read_opt(j, "gravity", c.gravity);
  read_opt(j, "standoff", c.standoff);
  c.validate();
  return c;
}

DetectorConfig detector_from(const Json& j) {
  DetectorConfig d;
  read_opt(j, "k", d.k);
  read_opt(j, "stride", d.stride);
  read_opt(j, "seal_threshold", d.seal_threshold);
  read_opt(j, "snap_epsilon", d.snap_epsilon);
  read_opt(j, "density", d.density);
  if (j.contains("unobserved")) d.unobserved = parse_unobserved_mode(j.at("unobserved").get<std::string>());
  read_opt(j, "newest_views_only", d.newest_views_only);
  d.validate();
  return d;
}

NoiseSpec noise_from(const Json& j) {
  NoiseSpec n;
  read_opt(j, "sigma", n.sigma);
  read_opt(j, "affine_scale_sigma", n.affine_scale_sigma);
  read_opt(j, "affine_shift_sigma", n.affine_shift_sigma);
  read_opt(j, "transparent_dropout", n.transparent_dropout);
  read_opt(j, "seed", n.seed);
  n.validate();
  return n;
}

Json randomization_json(const RandomizationSpec& r) {
  return {{"count_min", r.count_min},
          {"count_max", r.count_max},
          {"region_lo", {r.region_lo.x(), r.region_lo.y()}},
          {"region_hi", {r.region_hi.x(), r.region_hi.y()}},
          {"yaw_min", r.yaw_min},
          {"yaw_max", r.yaw_max},
          {"min_clearance", r.min_clearance},
          {"asset_ids", r.asset_ids},
          {"camera_position_jitter", to_json(r.camera_position_jitter)},
          {"camera_target_jitter", to_json(r.camera_target_jitter)},
          {"seed", r.seed}};
}

RandomizationSpec randomization_from(const Json& j) {
  RandomizationSpec r;
  read_opt(j, "count_min", r.count_min);
  read_opt(j, "count_max", r.count_max);
  if (j.contains("region_lo")) r.region_lo = Vec2(j["region_lo"][0].get<double>(), j["region_lo"][1].get<double>());
  if (j.contains("region_hi")) r.region_hi = Vec2(j["region_hi"][0].get<double>(), j["region_hi"][1].get<double>());
  read_opt(j, "yaw_min", r.yaw_min);
  read_opt(j, "yaw_max", r.yaw_max);
  read_opt(j, "min_clearance", r.min_clearance);
  read_opt(j, "asset_ids", r.asset_ids);
  read_vec3(j, "camera_position_jitter", r.camera_position_jitter);
  read_vec3(j, "camera_target_jitter", r.camera_target_jitter);
  read_opt(j, "seed", r.seed);
  return r;
}

double parse_double(const std::string& field, std::size_t line) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || field.empty())
    throw Error(Errc::kInvariantViolation, "line " + std::to_string(line) + ": bad number '" + field + "'");
  return v;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---- rasters -------------------------------------------------------------------

std::string encode_raster(const RasterFile& raster) {
  const std::uint64_t n = static_cast<std::uint64_t>(raster.width) * raster.height * raster.channels;
  if (raster.channels == 0 || raster.data.size() != n)
    throw Error(Errc::kDimensionMismatch, "raster payload does not match its dims");
  std::string out = "STPR";
  out.reserve(16 + n * 4);
  put_u32(out, raster.width);
  put_u32(out, raster.height);
  put_u32(out, raster.channels);
  for (float f : raster.data) put_f32(out, f);
  return out;
}

RasterFile decode_raster(const std::string& bytes) {
  Reader r(bytes);
  if (r.magic() != "STPR") throw Error(Errc::kBadMagic, "not a raster file");
  RasterFile out;
  out.width = r.u32();
  out.height = r.u32();
  out.channels = r.u32();
  if (out.channels == 0) throw Error(Errc::kInvalidArgument, "raster with zero channels");
  const std::uint64_t n = static_cast<std::uint64_t>(out.width) * out.height * out.channels;
  check_payload(r, n);
  out.data.resize(n);
  for (auto& f : out.data) f = r.f32();
  return out;
}

void save_raster(const RasterFile& raster, const fs::path& path) { write_text_file(path, encode_raster(raster)); }
RasterFile load_raster(const fs::path& path) { return decode_raster(read_file(path)); }

RasterFile raster_from_depth(const DepthMap& depth) {
  RasterFile out{static_cast<std::uint32_t>(depth.width()), static_cast<std::uint32_t>(depth.height()), 1, {}};
  out.data.reserve(depth.size());
  for (double d : depth.data()) out.data.push_back(static_cast<float>(d));
  return out;
}

DepthMap depth_from_raster(const RasterFile& raster) {
  if (raster.channels != 1) throw Error(Errc::kDimensionMismatch, "depth raster must have 1 channel");
  DepthMap out(static_cast<int>(raster.width), static_cast<int>(raster.height));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = raster.data[i];
  return out;
}

RasterFile raster_from_normals(const NormalMap& normals) {
  const auto& n = normals.normal;
  RasterFile out{static_cast<std::uint32_t>(n.width()), static_cast<std::uint32_t>(n.height()), 3, {}};
  out.data.reserve(n.size() * 3);
  for (std::size_t i = 0; i < n.size(); ++i)
    for (int c = 0; c < 3; ++c) out.data.push_back(normals.valid[i] ? static_cast<float>(n[i][c]) : 0.0f);
  return out;
}

NormalMap normals_from_raster(const RasterFile& raster) {
  if (raster.channels != 3) throw Error(Errc::kDimensionMismatch, "normal raster must have 3 channels");
  NormalMap out(static_cast<int>(raster.width), static_cast<int>(raster.height));
  for (std::size_t i = 0; i < out.normal.size(); ++i) {
    const Vec3 n(raster.data[3 * i], raster.data[3 * i + 1], raster.data[3 * i + 2]);
    out.normal[i] = n;
    out.valid[i] = n.squaredNorm() > 0.0 ? 1 : 0;
  }
  return out;
}

RasterFile raster_from_seal(const SealMap& seal) {
  RasterFile out{static_cast<std::uint32_t>(seal.value.width()), static_cast<std::uint32_t>(seal.value.height()), 2, {}};
  out.data.reserve(seal.value.size() * 2);
  for (std::size_t i = 0; i < seal.value.size(); ++i) {
    out.data.push_back(seal.valid[i] ? static_cast<float>(seal.value[i]) : 0.0f);
    out.data.push_back(seal.valid[i] ? 1.0f : 0.0f);
  }
  return out;
}

SealMap seal_from_raster(const RasterFile& raster) {
  if (raster.channels != 2) throw Error(Errc::kDimensionMismatch, "seal raster must have 2 channels");
  SealMap out(static_cast<int>(raster.width), static_cast<int>(raster.height));
  for (std::size_t i = 0; i < out.value.size(); ++i) {
    out.valid[i] = raster.data[2 * i + 1] != 0.0f ? 1 : 0;
    out.value[i] = out.valid[i] ? raster.data[2 * i] : 0.0;
  }
  return out;
}

RasterFile raster_from_mask(const InstanceMask& mask) {
  RasterFile out{static_cast<std::uint32_t>(mask.width()), static_cast<std::uint32_t>(mask.height()), 1, {}};
  out.data.reserve(mask.size());
  for (std::uint32_t id : mask.data()) {
    if (id >= (1u << 24)) throw Error(Errc::kOutOfRange, "instance id too large for a float raster");
    out.data.push_back(static_cast<float>(id));
  }
  return out;
}

InstanceMask mask_from_raster(const RasterFile& raster) {
  if (raster.channels != 1) throw Error(Errc::kDimensionMismatch, "mask raster must have 1 channel");
  InstanceMask out(static_cast<int>(raster.width), static_cast<int>(raster.height));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float f = raster.data[i];
    if (!(f >= 0.0f) || f != std::floor(f)) throw Error(Errc::kInvariantViolation, "mask holds a non-integer id");
    out[i] = static_cast<std::uint32_t>(f);
  }
  return out;
}

// ---- volumes ----------------------------------------------------------------------

std::string encode_volume(const TsdfVolume& volume) {
  const GridSpec& g = volume.spec;
  if (volume.values.size() != g.count() || volume.weights.size() != g.count())
    throw Error(Errc::kDimensionMismatch, "volume payload does not match grid dims");
  std::string out = "STPV";
  out.reserve(16 + g.count() * 8);
  for (int d : g.dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : volume.values) put_f32(out, static_cast<float>(v));
  for (double w : volume.weights) put_f32(out, static_cast<float>(w));
  return out;
}

TsdfVolume decode_volume(const std::string& bytes, const GridSpec& spec) {
  Reader r(bytes);
  if (r.magic() != "STPV") throw Error(Errc::kBadMagic, "not a volume file");
  std::array<int, 3> dims{};
  for (int& d : dims) d = static_cast<int>(r.u32());
  if (dims != spec.dims)
    throw Error(Errc::kDimensionMismatch, "volume dims " + std::to_string(dims[0]) + "x" + std::to_string(dims[1]) +
                                              "x" + std::to_string(dims[2]) + " disagree with the grid spec");
  check_payload(r, 2ull * spec.count());
  TsdfVolume vol(spec);
  for (double& v : vol.values) v = r.f32();
  for (double& w : vol.weights) w = r.f32();
  return vol;
}

void save_volume(const TsdfVolume& volume, const fs::path& path) { write_text_file(path, encode_volume(volume)); }
TsdfVolume load_volume(const fs::path& path, const GridSpec& spec) { return decode_volume(read_file(path), spec); }

// ---- annotations ------------------------------------------------------------------

std::string format_annotations(const std::vector<AnnotationRecord>& records) {
  std::string out = std::string(kAnnotationHeader) + "\n";
  for (const AnnotationRecord& r : records) {
    if (r.scene_id.find_first_of(",\n\r\"") != std::string::npos)
      throw Error(Errc::kInvalidArgument, "scene id '" + r.scene_id + "' cannot be written to CSV");
    out += r.scene_id + "," + std::to_string(r.instance_id);
    for (double v : {r.point.x(), r.point.y(), r.point.z(), r.direction.x(), r.direction.y(), r.direction.z(),
                     r.label.seal, r.label.wrench, r.label.collision, r.label.overall})
      out += "," + fmt17(v);
    out += "\n";
  }
  return out;
}

std::vector<AnnotationRecord> parse_annotations(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kAnnotationHeader)
    throw Error(Errc::kSchemaVersionMismatch, "unexpected annotation header");
  std::vector<AnnotationRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 12)
      throw Error(Errc::kInvariantViolation, "line " + std::to_string(lineno) + ": expected 12 fields");
    AnnotationRecord r;
    r.scene_id = fields[0];
    std::uint64_t id = 0;
    const auto res = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), id);
    if (res.ec != std::errc() || res.ptr != fields[1].data() + fields[1].size() || id > UINT32_MAX)
      throw Error(Errc::kInvariantViolation, "line " + std::to_string(lineno) + ": bad instance id");
    r.instance_id = static_cast<std::uint32_t>(id);
    double v[10];
    for (int i = 0; i < 10; ++i) v[i] = parse_double(fields[2 + i], lineno);
    r.point = Vec3(v[0], v[1], v[2]);
    r.direction = Vec3(v[3], v[4], v[5]);
    r.label = {v[6], v[7], v[8], v[9]};
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (!r.point.allFinite()) throw Error(Errc::kInvariantViolation, where + "non-finite point");
    if (!(std::abs(r.direction.norm() - 1.0) <= 1e-6))
      throw Error(Errc::kInvariantViolation, where + "direction is not unit length");
    if (!(r.label.seal >= 0.0 && r.label.seal <= 1.0 && r.label.wrench >= 0.0 && r.label.wrench <= 1.0 &&
          (r.label.collision == 0.0 || r.label.collision == 1.0)))
      throw Error(Errc::kInvariantViolation, where + "score outside its domain");
    if (!(std::abs(r.label.overall - r.label.seal * r.label.wrench * r.label.collision) <= 1e-12))
      throw Error(Errc::kInvariantViolation, where + "overall score is not the product of its components");
    out.push_back(std::move(r));
  }
  return out;
}

void save_annotations(const std::vector<AnnotationRecord>& records, const fs::path& path) {
  write_text_file(path, format_annotations(records));
}

std::vector<AnnotationRecord> load_annotations(const fs::path& path) { return parse_annotations(read_file(path)); }

std::vector<AnnotationRecord> poses_to_records(const std::vector<SuctionPoseResult>& poses,
                                               const std::string& scene_id) {
  std::vector<AnnotationRecord> out;
  out.reserve(poses.size());
  for (const auto& p : poses)
    out.push_back({scene_id, p.instance_id, p.point, p.direction, {p.seal, p.wrench, p.collision, p.overall}});
  return out;
}

// ---- manifests --------------------------------------------------------------------

Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json to_json(const BeltConfig& b) {
  return {{"speed", b.speed},
          {"direction", to_json(b.direction)},
          {"timestep", b.timestep},
          {"reconstruction_zone",
           {{"lo", to_json(b.reconstruction_zone.lo)}, {"hi", to_json(b.reconstruction_zone.hi)}}},
          {"suction_zone_begin", b.suction_zone_begin},
          {"suction_zone_end", b.suction_zone_end}};
}

Json to_json(const GridSpec& g) {
  return {{"origin", to_json(g.origin)}, {"voxel_size", g.voxel_size}, {"dims", g.dims}, {"truncation", g.truncation}};
}

Json to_json(const DetectorConfig& d) {
  return {{"k", d.k},
          {"stride", d.stride},
          {"seal_threshold", d.seal_threshold},
          {"snap_epsilon", d.snap_epsilon},
          {"density", d.density},
          {"unobserved", unobserved_mode_name(d.unobserved)},
          {"newest_views_only", d.newest_views_only}};
}

Json to_json(const NoiseSpec& n) {
  return {{"sigma", n.sigma},
          {"affine_scale_sigma", n.affine_scale_sigma},
          {"affine_shift_sigma", n.affine_shift_sigma},
          {"transparent_dropout", n.transparent_dropout},
          {"seed", n.seed}};
}

Json to_json(const RunManifest& m) {
  Json assets = Json::array();
  for (const auto& a : m.assets)
    assets.push_back({{"id", a.id}, {"source", a.source}, {"mass_kg", a.mass_kg}, {"transparent", a.transparent}});
  Json scenes = Json::array();
  for (const auto& s : m.scenes) {
    Json inst = Json::array();
    for (const auto& o : s.instances)
      inst.push_back({{"instance_id", o.instance_id}, {"asset_id", o.asset_id}, {"pose", pose_json(o.pose)}});
    scenes.push_back({{"id", s.id},
                      {"seed", s.seed},
                      {"cameras", Json::array({pose_json(s.rig[0]), pose_json(s.rig[1])})},
                      {"instances", inst}});
  }
  return {{"version", m.version},
          {"seed", m.seed},
          {"timesteps", m.timesteps},
          {"belt", to_json(m.belt)},
          {"intrinsics", intrinsics_json(m.intrinsics)},
          {"grid", to_json(m.grid)},
          {"cup", cup_json(m.cup)},
          {"detector", to_json(m.detector)},
          {"noise", to_json(m.noise)},
          {"randomization", randomization_json(m.randomization)},
          {"seal_stride", m.seal_stride},
          {"candidates_per_object", m.candidates_per_object},
          {"assets", assets},
          {"scenes", scenes}};
}

RunManifest manifest_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::kInvalidArgument, "manifest must be a JSON object");
  RunManifest m;
  try {
    if (j.contains("version")) {
      m.version = j.at("version").get<std::string>();
      if (m.version != kManifestVersion)
        throw Error(Errc::kSchemaVersionMismatch, "manifest version '" + m.version + "', expected " + kManifestVersion);
    }
    read_opt(j, "seed", m.seed);
    read_opt(j, "timesteps", m.timesteps);
    if (j.contains("belt")) m.belt = belt_from(j["belt"]);
    if (j.contains("intrinsics")) m.intrinsics = intrinsics_from(j["intrinsics"]);
    if (j.contains("grid")) m.grid = grid_from(j["grid"]);
    if (j.contains("cup")) m.cup = cup_from(j["cup"]);
    if (j.contains("detector")) m.detector = detector_from(j["detector"]);
    if (j.contains("noise")) m.noise = noise_from(j["noise"]);
    if (j.contains("randomization")) m.randomization = randomization_from(j["randomization"]);
    read_opt(j, "seal_stride", m.seal_stride);
    read_opt(j, "candidates_per_object", m.candidates_per_object);
    if (j.contains("assets"))
      for (const Json& a : j["assets"]) {
        AssetEntry e;
        e.id = a.at("id").get<std::string>();
        read_opt(a, "source", e.source);
        read_opt(a, "mass_kg", e.mass_kg);
        read_opt(a, "transparent", e.transparent);
        m.assets.push_back(e);
      }
    if (j.contains("scenes"))
      for (const Json& s : j["scenes"]) {
        SceneEntry e;
        e.id = s.at("id").get<std::string>();
        read_opt(s, "seed", e.seed);
        if (s.contains("cameras")) {
          if (s["cameras"].size() != 2) throw Error(Errc::kInvalidArgument, "a scene needs exactly two cameras");
          e.rig = {pose_from(s["cameras"][0]), pose_from(s["cameras"][1])};
        }
        for (const Json& o : s.at("instances")) {
          ObjectInstance inst;
          inst.instance_id = o.at("instance_id").get<std::uint32_t>();
          inst.asset_id = o.at("asset_id").get<std::string>();
          inst.pose = pose_from(o.at("pose"));
          e.instances.push_back(inst);
        }
        m.scenes.push_back(std::move(e));
      }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument, std::string("malformed manifest: ") + e.what());
  }
  if (m.timesteps < 1) throw Error(Errc::kInvalidArgument, "timesteps must be >= 1");
  if (m.seal_stride < 1) throw Error(Errc::kInvalidArgument, "seal_stride must be >= 1");
  if (m.candidates_per_object < 1) throw Error(Errc::kInvalidArgument, "candidates_per_object must be >= 1");
  return m;
}

std::string format_manifest(const RunManifest& manifest) { return to_json(manifest).dump(2) + "\n"; }

void save_manifest(const RunManifest& manifest, const fs::path& path) {
  write_text_file(path, format_manifest(manifest));
}

RunManifest load_manifest(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::kInvalidArgument, path.string() + ": " + e.what());
  }
  RunManifest m = manifest_from_json(j);
  for (const auto& a : m.assets)
    if (a.source != "builtin" && !fs::exists(path.parent_path() / a.source))
      throw Error(Errc::kIo, "asset file '" + a.source + "' referenced by " + path.string() + " is missing");
  return m;
}

AssetLibrary asset_library(const RunManifest& manifest, const fs::path& base_dir) {
  AssetLibrary lib = builtin_assets();
  for (const auto& a : manifest.assets) {
    if (a.source == "builtin") {
      if (!lib.contains(a.id)) throw Error(Errc::kInvalidArgument, "unknown builtin asset '" + a.id + "'");
      continue;
    }
    lib.add(make_asset(a.id, load_obj(base_dir / a.source), a.mass_kg, a.transparent, a.source));
  }
  return lib;
}

std::vector<AssetEntry> asset_entries(const AssetLibrary& library) {
  std::vector<AssetEntry> out;
  for (const auto& id : library.ids()) {
    const ObjectAsset& a = library.get(id);
    out.push_back({a.id, a.source, a.mass_kg, a.transparent});
  }
  return out;
}

Scene build_scene(const SceneEntry& entry, const AssetLibrary& library) { return Scene(entry.instances, library); }

// ---- reports -------------------------------------------------------------------------

Json to_json(const SuctionPoseResult& p) {
  return {{"point", to_json(p.point)},     {"direction", to_json(p.direction)}, {"s_seal", p.seal},
          {"s_wrench", p.wrench},          {"s_collision", p.collision},        {"s_overall", p.overall},
          {"pixel", {p.u, p.v}},           {"view", p.view},                    {"instance_id", p.instance_id},
          {"voxel", p.voxel}};
}

Json to_json(const DetectionStats& s) {
  return {{"surface_triangles", s.surface_triangles}, {"components", s.components}, {"proposals", s.proposals},
          {"lifted", s.lifted}, {"assigned", s.assigned}, {"empty_surface", s.empty_surface}};
}

Json to_json(const TsdfErrors& e) {
  return {{"tsdf_mae_mm", e.mae}, {"surface_tsdf_mae_mm", e.surface_mae}, {"voxels", e.count},
          {"surface_voxels", e.surface_count}};
}

Json to_json(const MetricsReport& r) {
  Json ap = Json::object();
  for (const auto& [k, v] : r.ap_topk) ap["top" + std::to_string(k)] = v;
  return {{"tsdf", to_json(r.tsdf)},
          {"seal_mae", r.seal_mae},
          {"collision_accuracy", r.collision_accuracy},
          {"ap", ap},
          {"predictions", r.predictions},
          {"seal_pixels", r.seal_pixels}};
}

Json to_json(const EpisodeLog& log, bool include_timings) {
  Json attempts = Json::array();
  for (const auto& a : log.attempts)
    attempts.push_back({{"step", a.step},
                        {"target_instance", a.target_instance},
                        {"hit_instance", a.hit_instance},
                        {"point_detected", to_json(a.point_detected)},
                        {"point_executed", to_json(a.point_executed)},
                        {"direction", to_json(a.direction)},
                        {"predicted", a.predicted},
                        {"t_detect", a.t_detect},
                        {"t_exec", a.t_exec},
                        {"gt", {{"seal", a.gt.seal}, {"wrench", a.gt.wrench}, {"collision", a.gt.collision},
                                {"overall", a.gt.overall}}},
                        {"success", a.success}});
  Json steps = Json::array();
  for (const auto& s : log.steps) {
    Json step = {{"step", s.step}, {"time", s.time}, {"detections", s.detections},
                 {"objects_on_belt", s.objects_on_belt}, {"scheduled", s.scheduled}};
    if (include_timings) step["seconds"] = s.seconds;
    steps.push_back(step);
  }
  Json out = {{"total_objects", log.total_objects}, {"attempts", attempts},       {"successes", log.successes},
              {"removed", log.removed},             {"success_rate", log.success_rate},
              {"declutter_rate", log.declutter_rate}, {"steps", steps}};
  if (include_timings) out["seconds"] = log.seconds;
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::kIo, "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(Errc::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace beltpick
