// Copyright 2026 The nqs3d Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: run | ground | ed | analyze | validate.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "nqs3d/runio.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Neural-network variational dynamics for the 3D transverse-field model"};
  app.require_subcommand(1);

  std::string config_path;
  std::string resume_path;
  std::string output_override;
  std::string data_dir;
  std::string out_dir;

  CLI::App* run = app.add_subcommand("run", "Integrate variational dynamics");
  run->add_option("--config", config_path, "run config JSON (a run manifest also works)")
      ->required();
  run->add_option("--resume", resume_path, "run_checkpoint.json to resume from");
  run->add_option("--output-dir", output_override, "override the config's output_dir");

  CLI::App* ground = app.add_subcommand("ground", "Variational ground-state search");
  ground->add_option("--config", config_path, "run config JSON")->required();
  ground->add_option("--output-dir", output_override, "override the config's output_dir");

  CLI::App* ed = app.add_subcommand("ed", "Dense reference evolution of the same config");
  ed->add_option("--config", config_path, "run config JSON")->required();
  ed->add_option("--output-dir", output_override, "override the config's output_dir");

  CLI::App* analyze = app.add_subcommand("analyze", "Correlation-collapse analysis");
  analyze->add_option("--data-dir", data_dir, "directory of completed run directories")
      ->required();
  analyze->add_option("--out-dir", out_dir, "where to write the collapse report")
      ->required();

  CLI::App* validate = app.add_subcommand("validate", "Check a run config and exit");
  validate->add_option("--config", config_path, "run config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      nqs::validate_run_config(nqs::load_run_config(config_path));
      std::printf("OK\n");
      return 0;
    }
    if (analyze->parsed()) return nqs::run_analysis(data_dir, out_dir);

    nqs::RunConfig cfg = nqs::load_run_config(config_path);
    if (!output_override.empty()) cfg.output_dir = output_override;
    if (run->parsed()) return nqs::run_dynamics(cfg, resume_path);
    if (ground->parsed()) return nqs::run_ground_search(cfg);
    if (ed->parsed()) return nqs::run_ed_reference(cfg);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
