// Command-line front end for the dual reversed rolling-shutter pipeline:
// synthesize dual-RS captures from frame stacks, extract global-shutter
// sequences back out of them, and evaluate the results.

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dualrs/io.hpp"
#include "dualrs/metrics.hpp"
#include "dualrs/simulator.hpp"
#include "dualrs/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dualrs;

namespace {

constexpr int kSchemaVersion = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%03d.png", index);
  return buf;
}

void save_sequence(const fs::path& dir, const std::vector<ImageBuf>& frames) {
  ensure_dir(dir);
  Cube cube(static_cast<int>(frames.size()), frames[0].height, frames[0].width,
            frames[0].channels);
  for (std::size_t n = 0; n < frames.size(); ++n) {
    save_png(dir / frame_name(static_cast<int>(n)), frames[n]);
    std::copy(frames[n].pixels.begin(), frames[n].pixels.end(),
              cube.data.begin() + static_cast<std::ptrdiff_t>(
                                      n * frames[n].pixels.size()));
  }
  save_cube(dir / "frames.drsc", cube);
}

std::vector<double> parse_scales(const std::string& text) {
  std::vector<double> scales;
  std::stringstream ss(text);
  std::string item;
  try {
    while (std::getline(ss, item, ',')) {
      const auto slash = item.find('/');
      if (slash == std::string::npos) {
        scales.push_back(std::stod(item));
      } else {
        scales.push_back(std::stod(item.substr(0, slash)) /
                         std::stod(item.substr(slash + 1)));
      }
    }
  } catch (const std::exception&) {
    throw UsageError("--scales: cannot parse \"" + text + "\"");
  }
  if (scales.empty()) throw UsageError("--scales parsed to an empty list");
  return scales;
}

VelocityModel parse_model(const std::string& name) {
  if (name == "const") return VelocityModel::GlobalConst;
  if (name == "affine") return VelocityModel::GlobalAffine;
  if (name == "dense") return VelocityModel::Dense;
  throw UsageError("--param must be const, affine or dense");
}

json objective_json(const ObjectiveBreakdown& b) {
  return json{{"data_term", b.data_term}, {"tv_term", b.tv_term}, {"total", b.total}};
}

int cmd_synth(const std::string& manifest_path, const std::string& out_dir_flag,
              std::uint64_t seed, bool seed_given) {
  SceneManifest manifest = load_manifest(manifest_path);
  if (manifest.procedural && seed_given) manifest.procedural->seed = seed;
  const fs::path out_dir =
      out_dir_flag.empty() ? fs::path(manifest.out_dir.empty() ? "." : manifest.out_dir)
                           : fs::path(out_dir_flag);
  ensure_dir(out_dir);

  const FrameStack stack = load_stack(manifest);
  const RsConfig cfg{stack.height(), manifest.row_readout, manifest.midpoint,
                     ScanDirection::T2B};
  const DualPair pair = synthesize_dual(stack, cfg, manifest.misalign_rows);
  const GsSequence gt = synthesize_gt(stack, cfg, manifest.n_frames);

  save_png(out_dir / "rs_t2b.png", pair.t2b);
  save_png(out_dir / "rs_b2t.png", pair.b2t);
  Cube rs(2, pair.t2b.height, pair.t2b.width, pair.t2b.channels);
  std::copy(pair.t2b.pixels.begin(), pair.t2b.pixels.end(), rs.data.begin());
  std::copy(pair.b2t.pixels.begin(), pair.b2t.pixels.end(),
            rs.data.begin() + static_cast<std::ptrdiff_t>(pair.t2b.pixels.size()));
  save_cube(out_dir / "rs.drsc", rs);
  save_sequence(out_dir / "gt", gt.frames);

  json meta{{"schema_version", kSchemaVersion},
            {"scene", manifest.scene_id},
            {"rows", cfg.rows},
            {"width", pair.t2b.width},
            {"channels", pair.t2b.channels},
            {"t_r", cfg.row_readout},
            {"t", cfg.midpoint},
            {"misalign_rows", manifest.misalign_rows},
            {"n_frames", manifest.n_frames},
            {"instants", gt.instants}};
  write_text_atomic(out_dir / "synth_meta.json", meta.dump(2) + "\n");
  std::cout << "synth: wrote dual pair + " << manifest.n_frames
            << " ground-truth frames to " << out_dir.string() << "\n";
  return 0;
}

int cmd_extract(const std::string& t2b_path, const std::string& b2t_path,
                const SolverParams& params, const std::string& oracle_path,
                int misalign_rows, double t_r, double midpoint,
                const std::string& out_dir_flag) {
  const fs::path out_dir(out_dir_flag);
  ensure_dir(out_dir);

  DualPair pair;
  pair.t2b = load_png(t2b_path);
  pair.b2t = load_png(b2t_path);
  if (!pair.t2b.same_shape(pair.b2t)) {
    throw ShapeError("inputs disagree: " + t2b_path + " is " +
                     std::to_string(pair.t2b.width) + "x" +
                     std::to_string(pair.t2b.height) + ", " + b2t_path + " is " +
                     std::to_string(pair.b2t.width) + "x" +
                     std::to_string(pair.b2t.height));
  }
  pair.config = RsConfig{pair.t2b.height, t_r, midpoint, ScanDirection::T2B};
  pair.row_misalignment = misalign_rows;

  ExtractResult result;
  if (!oracle_path.empty()) {
    const Cube cube = load_cube(oracle_path);
    VelocityCube v = VelocityCube::dense(cube.n_frames, cube.height, cube.width);
    v.params.assign(cube.data.begin(), cube.data.end());
    result = extract_frames(pair, params, v);
  } else {
    result = extract_frames(pair, params);
  }
  if (result.degenerate) {
    std::cerr << "warning: flat inputs, objective is velocity-insensitive; "
                 "using zero velocity\n";
  }

  save_sequence(out_dir, result.sequence.frames);
  save_cube(out_dir / "velocity.drsc", result.velocity.to_dense());
  save_cube(out_dir / "flow_t2b.drsc", result.flow_t2b.values);
  save_cube(out_dir / "flow_b2t.drsc", result.flow_b2t.values);

  std::string log_csv = "scale_index,scale,iteration,data_term,tv_term,total\n";
  for (const auto& rec : result.log) {
    char line[160];
    std::snprintf(line, sizeof(line), "%d,%g,%d,%.12g,%.12g,%.12g\n",
                  rec.scale_index, rec.scale, rec.iteration,
                  rec.objective.data_term, rec.objective.tv_term,
                  rec.objective.total);
    log_csv += line;
  }
  write_text_atomic(out_dir / "objective_log.csv", log_csv);

  json meta{{"schema_version", kSchemaVersion},
            {"model", to_string(params.model)},
            {"n_frames", params.n_frames},
            {"scales", params.scales},
            {"iters_per_scale", params.iters_per_scale},
            {"step", params.step},
            {"lambda_v", params.lambda_v},
            {"charbonnier_eps", params.charbonnier_eps},
            {"misalign_rows", misalign_rows},
            {"oracle_velocity", !oracle_path.empty()},
            {"degenerate", result.degenerate},
            {"instants", result.sequence.instants}};
  write_text_atomic(out_dir / "extract_meta.json", meta.dump(2) + "\n");
  std::cout << "extract: wrote " << params.n_frames << " frames to "
            << out_dir.string() << "\n";
  return 0;
}

GsSequence load_sequence_checked(const fs::path& path, bool& quantized) {
  if (!fs::exists(path)) throw IoError("input path does not exist: " + path.string());
  return load_sequence(path, quantized);
}

int cmd_eval(const std::string& outputs_path, const std::string& gt_path,
             const std::string& out_dir_flag) {
  bool out_quantized = false, gt_quantized = false;
  const GsSequence outputs = load_sequence_checked(outputs_path, out_quantized);
  const GsSequence gt = load_sequence_checked(gt_path, gt_quantized);
  if (outputs.frames.size() != gt.frames.size()) {
    throw ShapeError("sequence lengths differ: outputs has " +
                     std::to_string(outputs.frames.size()) + " frames, gt has " +
                     std::to_string(gt.frames.size()));
  }
  for (std::size_t n = 0; n < outputs.frames.size(); ++n) {
    const ImageBuf& a = outputs.frames[n];
    const ImageBuf& g = gt.frames[n];
    if (!a.same_shape(g)) {
      throw ShapeError("frame " + std::to_string(n) + " shapes differ: outputs " +
                       std::to_string(a.width) + "x" + std::to_string(a.height) +
                       "x" + std::to_string(a.channels) + " vs gt " +
                       std::to_string(g.width) + "x" + std::to_string(g.height) +
                       "x" + std::to_string(g.channels));
    }
  }

  const auto profiles = row_mse_profile(outputs, gt);
  std::string table = "frame      PSNR        SSIM\n";
  json frames_json = json::array();
  double psnr_sum = 0.0, ssim_sum = 0.0;
  int finite_psnr = 0;
  for (std::size_t n = 0; n < outputs.frames.size(); ++n) {
    const double p = psnr(outputs.frames[n], gt.frames[n]);
    const double s = ssim(outputs.frames[n], gt.frames[n]);
    char line[96];
    if (std::isinf(p)) {
      std::snprintf(line, sizeof(line), "%5zu         inf  %9.6f\n", n, s);
    } else {
      std::snprintf(line, sizeof(line), "%5zu  %10.4f  %9.6f\n", n, p, s);
    }
    table += line;
    if (!std::isinf(p)) {
      psnr_sum += p;
      ++finite_psnr;
    }
    ssim_sum += s;
    frames_json.push_back(
        {{"frame", n},
         {"psnr", std::isinf(p) ? json("inf") : json(p)},
         {"ssim", s},
         {"row_mse", profiles[n].row_mse}});
  }
  const double mean_psnr =
      finite_psnr > 0 ? psnr_sum / finite_psnr
                      : std::numeric_limits<double>::infinity();
  const double mean_ssim = ssim_sum / static_cast<double>(outputs.frames.size());
  char mean_line[96];
  if (finite_psnr == 0) {
    std::snprintf(mean_line, sizeof(mean_line), " mean         inf  %9.6f\n",
                  mean_ssim);
  } else {
    std::snprintf(mean_line, sizeof(mean_line), " mean  %10.4f  %9.6f\n",
                  mean_psnr, mean_ssim);
  }
  table += mean_line;
  if (out_quantized || gt_quantized) {
    table += "note: inputs include 8-bit PNG data; metrics carry its quantization\n";
  }
  std::cout << table;

  json report{{"schema_version", kSchemaVersion},
              {"outputs", outputs_path},
              {"gt", gt_path},
              {"quantized_8bit", out_quantized || gt_quantized},
              {"mean_psnr", finite_psnr == 0 ? json("inf") : json(mean_psnr)},
              {"mean_ssim", mean_ssim},
              {"frames", frames_json}};
  if (!out_dir_flag.empty()) {
    const fs::path out_dir(out_dir_flag);
    ensure_dir(out_dir);
    write_text_atomic(out_dir / "eval.txt", table);
    write_text_atomic(out_dir / "eval.json", report.dump(2) + "\n");
  }
  return 0;
}

int cmd_ambiguity(const std::string& out_dir_flag) {
  const fs::path out_dir(out_dir_flag);
  ensure_dir(out_dir);

  const AmbiguityScenes amb = ambiguity_scene();
  const ImageBuf a_fwd = synthesize_rs(amb.stack_a, amb.config_a);
  const ImageBuf b_fwd = synthesize_rs(amb.stack_b, amb.config_b);
  RsConfig ra = amb.config_a;
  ra.direction = ScanDirection::B2T;
  RsConfig rb = amb.config_b;
  rb.direction = ScanDirection::B2T;
  const ImageBuf a_rev = synthesize_rs(amb.stack_a, ra);
  const ImageBuf b_rev = synthesize_rs(amb.stack_b, rb);

  save_png(out_dir / "scene_a_t2b.png", a_fwd);
  save_png(out_dir / "scene_b_t2b.png", b_fwd);
  save_png(out_dir / "scene_a_b2t.png", a_rev);
  save_png(out_dir / "scene_b_b2t.png", b_rev);

  const double forward_mse = mse(a_fwd, b_fwd);
  const double reverse_mse = mse(a_rev, b_rev);
  double region_sum = 0.0;
  int region_count = 0;
  const float bg = a_rev.at(0, 0, 0);
  for (int y = 0; y < a_rev.height; ++y)
    for (int x = 0; x < a_rev.width; ++x) {
      const float va = a_rev.at(x, y, 0), vb = b_rev.at(x, y, 0);
      if (std::abs(va - bg) > 0.05f || std::abs(vb - bg) > 0.05f) {
        region_sum += (static_cast<double>(va) - vb) * (va - vb);
        ++region_count;
      }
    }
  const double region_mse = region_count > 0 ? region_sum / region_count : 0.0;

  json report{{"schema_version", kSchemaVersion},
              {"readout_a", amb.config_a.row_readout},
              {"readout_b", amb.config_b.row_readout},
              {"tilt_per_row", amb.tilt_per_row},
              {"t2b_mse", forward_mse},
              {"b2t_mse", reverse_mse},
              {"b2t_mse_object_region", region_mse},
              {"object_region_pixels", region_count},
              {"single_view_identical", forward_mse < 1e-6},
              {"dual_view_distinct", region_mse > 1e-3}};
  write_text_atomic(out_dir / "ambiguity.json", report.dump(2) + "\n");

  std::printf("ambiguity: t2b mse %.3g (same view), b2t object-region mse %.3g"
              " (dual view tells the scenes apart)\n",
              forward_mse, region_mse);
  return 0;
}

int cmd_profile_rows(const std::string& outputs_path, const std::string& gt_path,
                     int misalign_rows, const std::string& out_dir_flag) {
  bool q1 = false, q2 = false;
  const GsSequence outputs = load_sequence_checked(outputs_path, q1);
  const GsSequence gt = load_sequence_checked(gt_path, q2);
  const auto profiles = row_mse_profile(outputs, gt);

  const int rows = outputs.frames[0].height;
  const int n_targets = static_cast<int>(outputs.frames.size());
  const TimeCube pt = build_time_cube(rows, n_targets, ScanDirection::T2B);
  const TimeCube pb = build_time_cube(rows, n_targets, ScanDirection::B2T)
                          .shifted(misalignment_offset(misalign_rows, rows));

  std::string csv = "n,row,mse,min_abs_time_offset\n";
  for (const auto& p : profiles) {
    for (int m = 0; m < rows; ++m) {
      const double prox = std::min(std::abs(pt.at(p.target_index, m)),
                                   std::abs(pb.at(p.target_index, m)));
      char line[96];
      std::snprintf(line, sizeof(line), "%d,%d,%.12g,%.12g\n", p.target_index, m,
                    p.row_mse[m], prox);
      csv += line;
    }
  }
  const fs::path out_dir(out_dir_flag);
  ensure_dir(out_dir);
  write_text_atomic(out_dir / "row_profile.csv", csv);
  std::cout << "profile-rows: wrote " << profiles.size() << "x" << rows
            << " row profile to " << (out_dir / "row_profile.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual reversed rolling-shutter simulation and extraction"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "render a dual-RS pair and ground truth");
  std::string manifest_path, out_dir;
  std::uint64_t seed = 0;
  synth->add_option("--manifest", manifest_path, "scene manifest (JSON)")->required();
  synth->add_option("--out-dir", out_dir, "output directory (overrides manifest)");
  auto* seed_opt = synth->add_option("--seed", seed, "procedural scene seed override");

  // extract
  auto* extract = app.add_subcommand("extract", "recover GS frames from a dual pair");
  std::string t2b_path, b2t_path, oracle_path, param_name = "const",
              scales_text = "1/8,1/4,1/2,1";
  int n_frames = 9, iters = 200, misalign_rows = 0;
  double lambda_v = 0.1, step = -1.0, t_r = 87e-6, midpoint = 0.0;
  extract->add_option("--t2b", t2b_path, "top-to-bottom input PNG")->required();
  extract->add_option("--b2t", b2t_path, "bottom-to-top input PNG")->required();
  extract->add_option("--n-frames", n_frames, "frames to extract");
  extract->add_option("--param", param_name, "velocity model: const|affine|dense");
  extract->add_option("--scales", scales_text, "pyramid scales, e.g. 1/8,1/4,1/2,1");
  extract->add_option("--iters", iters, "iterations per scale");
  extract->add_option("--lambda-v", lambda_v, "flow smoothness weight");
  extract->add_option("--step", step, "line-search step in pixels");
  extract->add_option("--oracle-velocity", oracle_path, "velocity cube file to use as-is");
  extract->add_option("--misalign-rows", misalign_rows, "b2t clock offset in rows");
  extract->add_option("--t-r", t_r, "row readout in seconds (metadata)");
  extract->add_option("--t", midpoint, "exposure midpoint in seconds (metadata)");
  extract->add_option("--out-dir", out_dir, "output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "PSNR/SSIM report for extracted frames");
  std::string outputs_path, gt_path;
  eval->add_option("--outputs", outputs_path, "extracted frames (dir or .drsc)")->required();
  eval->add_option("--gt", gt_path, "reference frames (dir or .drsc)")->required();
  eval->add_option("--out-dir", out_dir, "where to write eval.txt / eval.json");

  // ambiguity
  auto* ambiguity = app.add_subcommand(
      "ambiguity", "readout-ambiguity demonstration scenes and report");
  ambiguity->add_option("--out-dir", out_dir, "output directory")->required();

  // profile-rows
  auto* profile = app.add_subcommand("profile-rows", "per-row MSE curve data");
  profile->add_option("--outputs", outputs_path, "extracted frames")->required();
  profile->add_option("--gt", gt_path, "reference frames")->required();
  profile->add_option("--misalign-rows", misalign_rows, "b2t clock offset in rows");
  profile->add_option("--out-dir", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(manifest_path, out_dir, seed, seed_opt->count() > 0);
    }
    if (extract->parsed()) {
      SolverParams params = SolverParams::defaults_for(parse_model(param_name), n_frames);
      params.scales = parse_scales(scales_text);
      params.iters_per_scale = iters;
      params.lambda_v = lambda_v;
      if (step > 0) params.step = step;
      try {
        params.validate();
      } catch (const ShapeError& e) {
        throw UsageError(e.what());
      }
      return cmd_extract(t2b_path, b2t_path, params, oracle_path, misalign_rows,
                         t_r, midpoint, out_dir);
    }
    if (eval->parsed()) return cmd_eval(outputs_path, gt_path, out_dir);
    if (ambiguity->parsed()) return cmd_ambiguity(out_dir);
    if (profile->parsed()) {
      return cmd_profile_rows(outputs_path, gt_path, misalign_rows, out_dir);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CoverageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    return what.rfind("manifest", 0) == 0 ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
