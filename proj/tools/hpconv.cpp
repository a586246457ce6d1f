// Copyright (c) 2026 the hpconv authors
// SPDX-License-Identifier: Apache-2.0
//
// Single entry point for the whole workflow: kernel generation, response
// maps, scene synthesis, training, evaluation, ablations, feature export.
// Every run is fully determined by its argument vector plus referenced
// files; outputs are byte-identical across repeats.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hpc/checkpoint.hpp"
#include "hpc/config.hpp"
#include "hpc/csv.hpp"
#include "hpc/experiments.hpp"
#include "hpc/hausdorff.hpp"
#include "hpc/kernel_priors.hpp"
#include "hpc/network.hpp"
#include "hpc/ply_io.hpp"
#include "hpc/scene.hpp"

namespace {

struct GlobalOpts {
  std::uint64_t seed = 0;
  int threads = 0;  // 0: fall back to HPC_THREADS, then 1
  bool quiet = false;
};

int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("HPC_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

std::ostream& note(const GlobalOpts& g) {
  static std::ostream null_stream{nullptr};
  return g.quiet ? null_stream : std::cout;
}

std::vector<hpc::PointCloud> load_clouds(const std::vector<std::string>& paths) {
  std::vector<hpc::PointCloud> clouds;
  clouds.reserve(paths.size());
  for (const std::string& path : paths) clouds.push_back(hpc::read_ply(path));
  return clouds;
}

hpc::PlyFormat format_of(bool ascii) {
  return ascii ? hpc::PlyFormat::Ascii : hpc::PlyFormat::BinaryLittleEndian;
}

void print_eval(const hpc::EvalResult& result) {
  hpc::TextTable table;
  table.header = {"class", "iou"};
  for (std::size_t c = 0; c < result.class_iou.size(); ++c) {
    const double iou = result.class_iou[c];
    table.rows.push_back({std::to_string(c), iou < 0.0 ? "-" : hpc::format_g9(iou)});
  }
  std::cout << hpc::render_table(table);
  std::cout << "miou " << hpc::format_g9(result.miou) << "\n";
  std::cout << "accuracy " << hpc::format_g9(result.accuracy) << "\n";
}

/// Decoder output feeding the head: full-resolution per-point features.
Eigen::MatrixXd head_features(const hpc::NetworkParams& params, const hpc::ScenePyramid& pyr,
                              hpc::ForwardTrace& trace, int threads) {
  hpc::network_forward(params, pyr, &trace, threads);
  return params.cfg.depth == 1 ? trace.blocks[0].out : trace.dec_out[0];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hausdorff point convolution toolkit"};
  app.require_subcommand(1);
  GlobalOpts g;
  auto* seed_opt = app.add_option("--seed", g.seed, "PRNG seed for generation and training");
  app.add_option("--threads", g.threads, "worker threads (default: HPC_THREADS or 1)");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  // gen-kernels
  auto* gen = app.add_subcommand("gen-kernels", "sample a kernel prior and write it as PLY");
  std::string gen_shape;
  int gen_n = 15;
  int gen_oversample = 64;
  std::string gen_out;
  bool gen_ascii = false;
  gen->add_option("--shape", gen_shape, "point | line | plane | sphere")->required();
  gen->add_option("--n", gen_n, "kernel point count")->check(CLI::PositiveNumber);
  gen->add_option("--oversample", gen_oversample, "candidate pool factor")
      ->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "output PLY path")->required();
  gen->add_flag("--ascii", gen_ascii, "write ASCII instead of binary");
  gen->callback([&] {
    const hpc::KernelPrior kernel =
        hpc::generate_kernel(hpc::kernel_shape_from_string(gen_shape), gen_n, gen_oversample);
    hpc::write_kernel_ply(kernel, gen_out, format_of(gen_ascii));
    note(g) << "wrote " << kernel.size() << "-point " << to_string(kernel.shape) << " kernel to "
            << gen_out << "\n";
  });

  // respond
  auto* respond = app.add_subcommand(
      "respond", "per-point similarity response of a cloud against a kernel prior");
  std::string respond_cloud, respond_kernel, respond_f = "sum", respond_out;
  double respond_radius = 0.0;
  respond->add_option("--cloud", respond_cloud, "input PLY")->required();
  respond->add_option("--kernel", respond_kernel, "kernel PLY from gen-kernels")->required();
  respond->add_option("--radius", respond_radius, "neighborhood radius")
      ->required()
      ->check(CLI::PositiveNumber);
  respond->add_option("--f", respond_f, "sum | max | min");
  respond->add_option("--out", respond_out, "output base path (.csv and .ply appended)")
      ->required();
  respond->callback([&] {
    const hpc::PointCloud cloud = hpc::read_ply(respond_cloud);
    const hpc::KernelPrior kernel = hpc::read_kernel_ply(respond_kernel);
    const int threads = resolve_threads(g.threads);
    std::vector<double> similarity = hpc::response_map(
        cloud, kernel, respond_radius, hpc::distributive_fn_from_string(respond_f), threads);
    // The library reports normalized distance (0 = perfect match); the
    // exported response is the similarity 1 - distance.
    for (double& v : similarity) v = 1.0 - v;
    hpc::write_response_csv(respond_out + ".csv", cloud, similarity);
    hpc::write_response_ply(cloud, similarity, respond_out + ".ply",
                            hpc::PlyFormat::BinaryLittleEndian);
    note(g) << "wrote " << respond_out << ".csv and " << respond_out << ".ply\n";
  });

  // synth
  auto* synth = app.add_subcommand("synth", "generate a labeled synthetic scene");
  std::string synth_spec, synth_out;
  bool synth_ascii = false;
  synth->add_option("--spec", synth_spec, "SceneSpec JSON path")->required();
  synth->add_option("--out", synth_out, "output PLY path")->required();
  synth->add_flag("--ascii", synth_ascii, "write ASCII instead of binary");
  synth->callback([&] {
    hpc::SceneSpec spec = hpc::load_scene_spec(synth_spec);
    if (seed_opt->count() > 0) spec.seed = g.seed;  // --seed overrides the spec file
    const hpc::PointCloud scene = hpc::generate_scene(spec);
    hpc::write_ply(scene, synth_out, format_of(synth_ascii));
    note(g) << "wrote " << scene.size() << " points to " << synth_out << "\n";
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "train a segmentation network");
  std::string train_config;
  std::vector<std::string> train_data;
  std::string train_out;
  int train_epochs = 50;
  double train_lr = 1e-2;
  double train_momentum = 0.9;
  double train_target = -1.0;
  bool train_timing = false;
  train_cmd->add_option("--config", train_config, "NetworkConfig JSON (defaults when omitted)");
  train_cmd->add_option("--data", train_data, "training scene PLY paths")
      ->required()
      ->expected(-1);
  train_cmd->add_option("--epochs", train_epochs, "training epochs")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_lr, "initial learning rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("--momentum", train_momentum, "SGD momentum");
  train_cmd->add_option("--target-accuracy", train_target,
                        "stop after reaching this train accuracy (off when <= 0)");
  train_cmd->add_flag("--log-timing", train_timing,
                      "record wall time per epoch (breaks byte-identical logs)");
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->callback([&] {
    const hpc::NetworkConfig cfg = train_config.empty()
                                       ? hpc::NetworkConfig{}
                                       : hpc::load_network_config(train_config);
    const std::vector<hpc::PointCloud> dataset = load_clouds(train_data);
    hpc::TrainOptions opts;
    opts.epochs = train_epochs;
    opts.seed = g.seed;
    opts.threads = resolve_threads(g.threads);
    opts.lr = train_lr;
    opts.momentum = train_momentum;
    opts.log_wall_time = train_timing;
    opts.target_accuracy = train_target;
    const hpc::TrainResult result = hpc::train(cfg, dataset, opts);
    for (const hpc::MetricRow& row : result.log) {
      note(g) << "epoch " << row.epoch << " loss " << hpc::format_g9(row.loss) << " miou "
              << hpc::format_g9(row.miou) << "\n";
    }
    std::filesystem::create_directories(train_out);
    hpc::save_network_checkpoint(train_out + "/checkpoint.hpcw", result.state);
    hpc::write_metrics_csv(train_out + "/metrics.csv", result.log);
    note(g) << "wrote " << train_out << "/checkpoint.hpcw and " << train_out << "/metrics.csv\n";
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on labeled scenes");
  std::string eval_checkpoint;
  std::vector<std::string> eval_data;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "labeled scene PLY paths")->required()->expected(-1);
  eval_cmd->callback([&] {
    const hpc::TrainState state = hpc::load_network_checkpoint(eval_checkpoint);
    const hpc::EvalResult result =
        hpc::evaluate(state.params, load_clouds(eval_data), resolve_threads(g.threads));
    print_eval(result);
  });

  // ablate
  auto* ablate = app.add_subcommand("ablate", "sweep one design axis and compare mIoU");
  std::string ablate_axis, ablate_config, ablate_scene, ablate_out;
  hpc::AblationOptions ablate_opts;
  ablate->add_option("--axis", ablate_axis, "distfn | distance-matrix | kernel-shape | kernel-count")
      ->required();
  ablate->add_option("--config", ablate_config, "base NetworkConfig JSON");
  ablate->add_option("--scene", ablate_scene, "SceneSpec JSON for train/test scenes");
  ablate->add_option("--seeds", ablate_opts.seeds, "seeds to average over")
      ->check(CLI::PositiveNumber);
  ablate->add_option("--epochs", ablate_opts.epochs, "epochs per run")
      ->check(CLI::PositiveNumber);
  ablate->add_option("--train-scenes", ablate_opts.train_scenes, "scenes per training set")
      ->check(CLI::PositiveNumber);
  ablate->add_option("--test-scenes", ablate_opts.test_scenes, "scenes per held-out set")
      ->check(CLI::PositiveNumber);
  ablate->add_option("--out", ablate_out, "also write the table as CSV here");
  ablate->callback([&] {
    if (!ablate_config.empty()) ablate_opts.base = hpc::load_network_config(ablate_config);
    if (!ablate_scene.empty()) ablate_opts.scene = hpc::load_scene_spec(ablate_scene);
    ablate_opts.threads = resolve_threads(g.threads);
    const hpc::AblationAxis axis = hpc::ablation_axis_from_string(ablate_axis);
    const hpc::AblationReport report = hpc::run_ablation(axis, ablate_opts);
    const hpc::TextTable table = hpc::ablation_table(report, ablate_opts.seeds);
    std::cout << hpc::render_table(table);
    if (!ablate_out.empty()) {
      hpc::write_table_csv(ablate_out, table);
      note(g) << "wrote " << ablate_out << "\n";
    }
  });

  // export-features
  auto* export_cmd =
      app.add_subcommand("export-features", "full-resolution features and predictions as CSV");
  std::string export_checkpoint, export_cloud, export_out;
  export_cmd->add_option("--checkpoint", export_checkpoint, "checkpoint path")->required();
  export_cmd->add_option("--cloud", export_cloud, "input PLY")->required();
  export_cmd->add_option("--out", export_out, "output CSV path")->required();
  export_cmd->callback([&] {
    const hpc::TrainState state = hpc::load_network_checkpoint(export_checkpoint);
    const hpc::PointCloud cloud = hpc::read_ply(export_cloud);
    const int threads = resolve_threads(g.threads);
    const hpc::ScenePyramid pyr =
        hpc::build_pyramid(cloud, state.params.cfg, state.params.priors, threads);
    hpc::ForwardTrace trace;
    const Eigen::MatrixXd features = head_features(state.params, pyr, trace, threads);
    hpc::write_features_csv(export_out, cloud, features, hpc::predict_labels(trace.logits));
    note(g) << "wrote " << export_out << "\n";
  });

  // Global flags may appear after the subcommand name.
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
