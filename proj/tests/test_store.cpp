#include <fstream>

#include "doctest.h"

#include "beltpick/rng.hpp"
#include "beltpick/store.hpp"
#include "test_util.hpp"

using namespace beltpick;

TEST_SUITE("store") {
  TEST_CASE("raster round trips") {
    SplitMix64 rng(1);
    RasterFile r{7, 5, 3, {}};
    for (int i = 0; i < 7 * 5 * 3; ++i) r.data.push_back(static_cast<float>(rng.uniform(-1e3, 1e3)));
    CHECK(decode_raster(encode_raster(r)) == r);

    DepthMap depth(4, 3, 0.0);
    depth(1, 2) = 412.5;
    CHECK(depth_from_raster(raster_from_depth(depth)) == depth);

    SealMap seal(4, 3);
    seal.value(2, 1) = 0.75;
    seal.valid(2, 1) = 1;
    const SealMap seal_back = seal_from_raster(raster_from_seal(seal));
    CHECK(seal_back.value == seal.value);
    CHECK(seal_back.valid == seal.valid);

    InstanceMask mask(4, 3, 0);
    mask(3, 0) = 17;
    CHECK(mask_from_raster(raster_from_mask(mask)) == mask);

    NormalMap normals(4, 3);
    normals.normal(0, 0) = Vec3(0, 0, 1);
    normals.valid(0, 0) = 1;
    const NormalMap n_back = normals_from_raster(raster_from_normals(normals));
    CHECK(n_back.valid == normals.valid);
    CHECK(n_back.normal(0, 0) == Vec3(0, 0, 1));
  }

  TEST_CASE("corrupt rasters are rejected") {
    const std::string bytes = encode_raster(RasterFile{2, 2, 1, {1.f, 2.f, 3.f, 4.f}});
    std::string bad = bytes;
    bad[1] = 'Q';
    CHECK(test::error_code([&] { decode_raster(bad); }) == Errc::kBadMagic);
    CHECK(test::error_code([&] { decode_raster(bytes.substr(0, bytes.size() - 3)); }) == Errc::kTruncatedFile);
    CHECK(test::error_code([&] { decode_raster(bytes.substr(0, 6)); }) == Errc::kTruncatedFile);
    CHECK(test::error_code([&] { depth_from_raster(RasterFile{1, 1, 2, {0.f, 0.f}}); }) == Errc::kDimensionMismatch);
  }

  TEST_CASE("volume round trip") {
    GridSpec g;
    g.dims = {5, 4, 3};
    TsdfVolume vol(g);
    SplitMix64 rng(2);
    for (std::size_t i = 0; i < g.count(); ++i) {
      vol.values[i] = static_cast<float>(rng.uniform(-1, 1));
      vol.weights[i] = static_cast<float>(rng.below(4));
    }
    const TsdfVolume back = decode_volume(encode_volume(vol), g);
    CHECK(back.values == vol.values);
    CHECK(back.weights == vol.weights);
    GridSpec other = g;
    other.dims = {4, 5, 3};
    CHECK(test::error_code([&] { decode_volume(encode_volume(vol), other); }) == Errc::kDimensionMismatch);
    std::string bad = encode_volume(vol);
    bad[0] = 'X';
    CHECK(test::error_code([&] { decode_volume(bad, g); }) == Errc::kBadMagic);
  }

  TEST_CASE("annotation CSV") {
    AnnotationRecord r;
    r.scene_id = "s0001";
    r.instance_id = 3;
    r.point = Vec3(1.25, -2.5, 30.125);
    r.direction = Vec3(0, 0.6, 0.8);
    r.label = {0.9, 0.5, 1.0, 0.9 * 0.5 * 1.0};
    const std::string text = format_annotations({r, r});
    CHECK(text.rfind(kAnnotationHeader, 0) == 0);
    const auto back = parse_annotations(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].point == r.point);
    CHECK(back[0].direction == r.direction);
    CHECK(back[0].label.overall == r.label.overall);
    CHECK(back[1].instance_id == 3u);

    AnnotationRecord broken = r;
    broken.label.overall = 0.5;
    CHECK(test::error_code([&] { parse_annotations(format_annotations({broken})); }) == Errc::kInvariantViolation);
    AnnotationRecord skew = r;
    skew.direction = Vec3(0, 0, 2);
    CHECK(test::error_code([&] { parse_annotations(format_annotations({skew})); }) == Errc::kInvariantViolation);
    CHECK(test::error_code([&] { parse_annotations("a,b\n"); }) == Errc::kSchemaVersionMismatch);
    CHECK(test::error_code([&] { parse_annotations(std::string(kAnnotationHeader) + "\ns,1,2\n"); }) ==
          Errc::kInvariantViolation);
  }

  TEST_CASE("manifest round trip") {
    RunManifest m;
    m.seed = 77;
    m.timesteps = 3;
    m.noise.sigma = 2.0;
    m.detector.k = 9;
    m.detector.unobserved = UnobservedMode::kOccupied;
    m.randomization.count_min = 2;
    SceneEntry e;
    e.id = "s0000";
    e.seed = 123;
    e.instances = generate_scene(m.randomization, builtin_assets(), 123).instances();
    m.scenes = {e};
    const std::string text = format_manifest(m);
    const RunManifest back = manifest_from_json(Json::parse(text));
    CHECK(format_manifest(back) == text);
    CHECK(back.detector.unobserved == UnobservedMode::kOccupied);
    REQUIRE(back.scenes.size() == 1);
    const Scene rebuilt = build_scene(back.scenes[0], asset_library(back, "."));
    const Scene original = generate_scene(m.randomization, builtin_assets(), 123);
    REQUIRE(rebuilt.objects().size() == original.objects().size());
    for (std::size_t i = 0; i < rebuilt.objects().size(); ++i)
      CHECK(rebuilt.objects()[i].mesh->vertices == original.objects()[i].mesh->vertices);

    Json j = to_json(m);
    j["version"] = "beltpick-0";
    CHECK(test::error_code([&] { manifest_from_json(j); }) == Errc::kSchemaVersionMismatch);
    CHECK(manifest_from_json(Json::object()).timesteps == 5);
  }

  TEST_CASE("manifests with OBJ assets") {
    const auto dir = test::temp_dir("obj_manifest");
    save_obj(make_box(Vec3(30, 40, 50)), dir / "crate.obj");
    RunManifest m;
    m.assets = {AssetEntry{"crate", "crate.obj", 0.1, false}};
    save_manifest(m, dir / "manifest.json");
    const RunManifest back = load_manifest(dir / "manifest.json");
    const AssetLibrary lib = asset_library(back, dir);
    REQUIRE(lib.contains("crate"));
    CHECK(lib.get("crate").mesh->watertight);
    CHECK(lib.get("crate").mass_kg == 0.1);
    CHECK(lib.contains("box_60"));

    std::filesystem::remove(dir / "crate.obj");
    CHECK(test::error_code([&] { load_manifest(dir / "manifest.json"); }) == Errc::kIo);
  }
}
