#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "beltpick/annotator.hpp"
#include "beltpick/declutter.hpp"
#include "beltpick/detector.hpp"
#include "beltpick/eval.hpp"
#include "beltpick/recon.hpp"
#include "beltpick/scene.hpp"

namespace beltpick {

using Json = nlohmann::json;

inline constexpr const char* kManifestVersion = "beltpick-1";

// ---- binary rasters ('STPR') and volumes ('STPV') --------------------------
// Little-endian u32 header fields followed by float32 payload. Values are
// narrowed to float32 on save, so round trips are bitwise for data that is
// already float32-representable.

struct RasterFile {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t channels = 1;
  std::vector<float> data;  // row-major, channels interleaved

  bool operator==(const RasterFile&) const = default;
};

std::string encode_raster(const RasterFile& raster);
RasterFile decode_raster(const std::string& bytes);
void save_raster(const RasterFile& raster, const std::filesystem::path& path);
RasterFile load_raster(const std::filesystem::path& path);

RasterFile raster_from_depth(const DepthMap& depth);
DepthMap depth_from_raster(const RasterFile& raster);
// Three channels; invalid pixels are the zero vector.
RasterFile raster_from_normals(const NormalMap& normals);
NormalMap normals_from_raster(const RasterFile& raster);
// Two channels: value, validity (0/1).
RasterFile raster_from_seal(const SealMap& seal);
SealMap seal_from_raster(const RasterFile& raster);
// Ids are stored as floats and must stay below 2^24.
RasterFile raster_from_mask(const InstanceMask& mask);
InstanceMask mask_from_raster(const RasterFile& raster);

std::string encode_volume(const TsdfVolume& volume);
// The grid comes from the accompanying manifest; the header dims must match it.
TsdfVolume decode_volume(const std::string& bytes, const GridSpec& spec);
void save_volume(const TsdfVolume& volume, const std::filesystem::path& path);
TsdfVolume load_volume(const std::filesystem::path& path, const GridSpec& spec);

// ---- annotations (CSV) ------------------------------------------------------

inline constexpr const char* kAnnotationHeader =
    "scene_id,instance_id,px,py,pz,dx,dy,dz,s_seal,s_wrench,s_collision,s_overall";

std::string format_annotations(const std::vector<AnnotationRecord>& records);
/// Rejects a wrong header, malformed rows, |d| off unit length by more than
/// 1e-6, and rows whose overall score is not seal * wrench * collision within
/// 1e-12 (kInvariantViolation).
std::vector<AnnotationRecord> parse_annotations(const std::string& text);
void save_annotations(const std::vector<AnnotationRecord>& records, const std::filesystem::path& path);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);

std::vector<AnnotationRecord> poses_to_records(const std::vector<SuctionPoseResult>& poses,
                                               const std::string& scene_id);

// ---- manifests ---------------------------------------------------------------

struct AssetEntry {
  std::string id;
  std::string source = "builtin";  // "builtin" or an OBJ path relative to the manifest
  double mass_kg = 0.0;
  bool transparent = false;
};

struct SceneEntry {
  std::string id;
  std::uint64_t seed = 0;
  std::array<RigidPose, 2> rig = default_stereo_rig();
  std::vector<ObjectInstance> instances;
};

/// Run configuration plus the scenes it produced. The same structure serves as
/// the --config file (every field optional there).
struct RunManifest {
  std::string version = kManifestVersion;
  std::uint64_t seed = 0;
  int timesteps = 5;
  BeltConfig belt;
  CameraIntrinsics intrinsics;
  GridSpec grid;
  SuctionCupSpec cup;
  DetectorConfig detector;
  NoiseSpec noise;
  RandomizationSpec randomization;
  int seal_stride = 4;
  int candidates_per_object = 64;
  std::vector<AssetEntry> assets;
  std::vector<SceneEntry> scenes;
};

Json to_json(const RunManifest& manifest);
// Missing keys keep their defaults; a present "version" must match.
RunManifest manifest_from_json(const Json& j);
std::string format_manifest(const RunManifest& manifest);
void save_manifest(const RunManifest& manifest, const std::filesystem::path& path);
/// Parses, checks the version and that every non-builtin asset file exists
/// next to the manifest.
RunManifest load_manifest(const std::filesystem::path& path);

// Builtin assets plus any OBJ assets listed in the manifest.
AssetLibrary asset_library(const RunManifest& manifest, const std::filesystem::path& base_dir);
std::vector<AssetEntry> asset_entries(const AssetLibrary& library);
Scene build_scene(const SceneEntry& entry, const AssetLibrary& library);

// ---- report fragments ---------------------------------------------------------

Json to_json(const Vec3& v);
Json to_json(const BeltConfig& belt);
Json to_json(const GridSpec& grid);
Json to_json(const DetectorConfig& config);
Json to_json(const NoiseSpec& noise);
Json to_json(const SuctionPoseResult& pose);
Json to_json(const DetectionStats& stats);
Json to_json(const TsdfErrors& errors);
Json to_json(const MetricsReport& report);
Json to_json(const EpisodeLog& log, bool include_timings = true);

// Writes `text` to `path` atomically enough for a single writer: temp file then rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_file(const std::filesystem::path& path);

}  // namespace beltpick
