#include <exception>
#include <iostream>

#include "CLI11.hpp"

#include "beltpick/error.hpp"
#include "commands.hpp"

namespace {

// Errors caused by the user's files or flags exit 1; anything else is a bug or
// an environment failure and exits 2.
int exit_code_for(beltpick::Errc code) {
  using beltpick::Errc;
  switch (code) {
    case Errc::kInvalidArgument:
    case Errc::kBadMagic:
    case Errc::kTruncatedFile:
    case Errc::kSchemaVersionMismatch:
    case Errc::kIo:
    case Errc::kDimensionMismatch:
    case Errc::kSpecMismatch:
    case Errc::kPlacementFailure:
    case Errc::kInvariantViolation:
      return 1;
    default:
      return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = beltpick::cli;
  CLI::App app{"Conveyor-belt suction picking: scene generation, reconstruction, detection and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  cli::GlobalOptions global;
  app.add_option("--config", global.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", global.seed, "Master seed");
  app.add_option("--out", global.out, "Output directory")->capture_default_str();
  app.add_option("--timesteps", global.timesteps, "Capture window length");
  app.add_option("--noise-sigma", global.noise_sigma, "Per-pixel depth noise sigma, mm");
  app.add_option("--k", global.k, "Top-k detections");

  cli::GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate randomized scenes");
  gen_cmd->add_option("--count", gen.count, "Number of scenes")->capture_default_str();

  cli::SceneOptions render, annotate, fuse, detect, eval;
  auto add_scene_cmd = [&](const char* name, const char* help, cli::SceneOptions& opts) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--scene", opts.scene, "Scene id (default: all)");
    return cmd;
  };
  auto* render_cmd = add_scene_cmd("render", "Render depth, normal, mask and seal rasters", render);
  auto* annotate_cmd = add_scene_cmd("annotate", "Write ground-truth suction annotations", annotate);
  auto* fuse_cmd = add_scene_cmd("fuse", "Fuse rendered depth into a TSDF volume", fuse);
  auto* detect_cmd = add_scene_cmd("detect", "Detect suction poses", detect);
  auto* eval_cmd = add_scene_cmd("eval", "Evaluate reconstruction and detection", eval);

  cli::DeclutterOptions declutter;
  auto* declutter_cmd = app.add_subcommand("declutter", "Run the closed-loop belt declutter simulation");
  declutter_cmd->add_option("--scene", declutter.scene, "Scene id (default: all)");
  declutter_cmd->add_option("--upstream", declutter.upstream, "Start offset against the belt direction, mm")
      ->capture_default_str();
  declutter_cmd->add_option("--max-steps", declutter.max_steps, "Timestep budget")->capture_default_str();

  auto* selftest_cmd = app.add_subcommand("selftest", "Run built-in sanity checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*gen_cmd) return cli::run_gen(global, gen);
    if (*render_cmd) return cli::run_render(global, render);
    if (*annotate_cmd) return cli::run_annotate(global, annotate);
    if (*fuse_cmd) return cli::run_fuse(global, fuse);
    if (*detect_cmd) return cli::run_detect(global, detect);
    if (*eval_cmd) return cli::run_eval(global, eval);
    if (*declutter_cmd) return cli::run_declutter(global, declutter);
    if (*selftest_cmd) return cli::run_selftest(global);
  } catch (const beltpick::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
