// ddir train|eval|infer|synth|gradcheck
//
// Failures print one line starting with "ERROR:" on stderr and exit with
// 1 (usage), 2 (data) or 3 (numeric, including a failed gradient check).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ddir/cli/commands.h"
#include "ddir/cli/config.h"
#include "ddir/common/error.h"
#include "ddir/common/malloc_tuning.h"
#include "ddir/data/synth.h"

namespace fs = std::filesystem;
using namespace ddir;

namespace {

struct Options {
  std::string config;
  std::string checkpoint;
  std::string input;
  std::string output;
  double scale = 0;
};

int fail(ExitCode code, std::string message) {
  for (char& c : message) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "ERROR: " << message << std::endl;
  return static_cast<int>(code);
}

cli::RunConfig config_of(const Options& o) {
  return o.config.empty() ? cli::parse_config("", fs::current_path()) : cli::load_config(o.config);
}

int run_train(const Options& o) {
  cli::RunConfig cfg = config_of(o);
  if (!o.output.empty()) cfg.output_dir = o.output;
  const cli::TrainResult r = cli::cmd_train(cfg, std::cerr);
  std::cout << r.final_checkpoint.string() << "\n";
  return 0;
}

int run_eval(const Options& o) {
  const cli::RunConfig cfg = config_of(o);
  std::optional<fs::path> checkpoint;
  if (!o.checkpoint.empty()) checkpoint = o.checkpoint;
  const std::string csv = cli::format_eval_csv(cli::cmd_eval(cfg, checkpoint));
  std::cout << csv;
  if (!o.output.empty()) {
    std::ofstream out(o.output);
    if (!(out << csv)) throw DataError("cannot write " + o.output);
  }
  return 0;
}

int run_infer(const Options& o) {
  if (o.checkpoint.empty() || o.input.empty() || o.output.empty()) {
    throw UsageError("infer needs --checkpoint, --input, --scale and --output");
  }
  const cli::RunConfig cfg = config_of(o);
  const imaging::Image out = cli::cmd_infer(o.checkpoint, o.input, o.scale, o.output, cfg.chunk);
  std::cout << o.output << " " << out.height() << "x" << out.width() << "\n";
  return 0;
}

int run_synth(const Options& o) {
  cli::RunConfig cfg = config_of(o);
  if (!o.output.empty()) cfg.synth_output = o.output;
  const data::Manifest m = cli::cmd_synth(cfg);
  std::cout << (cfg.synth_output / "manifest.csv").string() << " " << m.records.size() << " pairs\n";
  return 0;
}

int run_gradcheck(const Options& o) {
  const cli::RunConfig cfg = config_of(o);
  bool ok = true;
  for (const cli::GradcheckLine& l : cli::cmd_gradcheck(cfg)) {
    std::printf("%-44s max_rel=%.3e elements=%zu refined=%zu worst=%s a=%.6e n=%.6e %s\n", l.name.c_str(),
                l.max_rel_error, l.elements, l.refined, l.worst.c_str(), l.analytic, l.numeric,
                l.pass ? "PASS" : "FAIL");
    ok = ok && l.pass;
  }
  if (!ok) {
    return fail(ExitCode::kNumeric, "gradient check exceeded relative error " +
                                        std::to_string(cli::kGradcheckTolerance));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Dual-branch deformable implicit representation for arbitrary-scale super-resolution"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value run configuration");
    sub->add_option("--checkpoint", o.checkpoint, "checkpoint file");
    sub->add_option("--scale", o.scale, "upscaling factor");
    sub->add_option("--input", o.input, "input image");
    sub->add_option("--output", o.output, "output path");
  };
  CLI::App* train = app.add_subcommand("train", "train a model");
  CLI::App* eval = app.add_subcommand("eval", "PSNR-Y per scale on the test manifest");
  CLI::App* infer = app.add_subcommand("infer", "upscale one image");
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  for (CLI::App* sub : {train, eval, infer, synth, gradcheck}) common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(ExitCode::kUsage, e.what());
  }

  try {
    if (train->parsed()) return run_train(o);
    if (eval->parsed()) return run_eval(o);
    if (infer->parsed()) return run_infer(o);
    if (synth->parsed()) return run_synth(o);
    return run_gradcheck(o);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(ExitCode::kData, e.what());
  } catch (const std::exception& e) {
    return fail(ExitCode::kUsage, e.what());
  }
}
