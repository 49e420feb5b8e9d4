#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace beltpick::cli {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> timesteps;
  std::optional<double> noise_sigma;
  std::optional<int> k;
};

struct GenOptions {
  int count = 1;
};

struct SceneOptions {
  std::string scene;  // empty = every scene under <out>/scenes
};

struct DeclutterOptions {
  std::string scene;
  double upstream = 500.0;  // mm the scene is moved against the belt before the run
  int max_steps = 30;
};

int run_gen(const GlobalOptions& global, const GenOptions& options);
int run_render(const GlobalOptions& global, const SceneOptions& options);
int run_annotate(const GlobalOptions& global, const SceneOptions& options);
int run_fuse(const GlobalOptions& global, const SceneOptions& options);
int run_detect(const GlobalOptions& global, const SceneOptions& options);
int run_eval(const GlobalOptions& global, const SceneOptions& options);
int run_declutter(const GlobalOptions& global, const DeclutterOptions& options);
int run_selftest(const GlobalOptions& global);

}  // namespace beltpick::cli
