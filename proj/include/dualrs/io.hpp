#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "dualrs/camera.hpp"
#include "dualrs/geometry.hpp"
#include "dualrs/scenes.hpp"

namespace dualrs {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// 8-bit PNG, grayscale or RGB depending on channels. Written atomically
/// (temp file + rename) with fixed settings so re-runs are byte-identical.
void save_png(const std::filesystem::path& path, const ImageBuf& img);
ImageBuf load_png(const std::filesystem::path& path);

/// Lossless float cube container: magic "DRSC1", then N,H,W,C as four
/// little-endian u32, then the row-major (n,h,w,c) payload as little-endian
/// f32. Written atomically.
void save_cube(const std::filesystem::path& path, const Cube& cube);
Cube load_cube(const std::filesystem::path& path);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);

/// Scene description consumed by the synth command. Exactly one of
/// `stack_dir` (a directory of equally-sized PNG frames in lexicographic
/// order) or `procedural` (a generated scene) must be present.
struct ProceduralSpec {
  std::string kind;  // "noise", "bar" or "line"
  std::uint64_t seed = 1;
  int width = 256, height = 256;
  double vx = 0.0, vy = 0.0;  // px/s
  double bar_width = 20.0, edge_width = 3.0, tilt = 0.0;

  Scene build() const;
};

struct SceneManifest {
  int schema_version = 1;
  std::string scene_id;
  std::string stack_dir;  // empty when procedural
  std::optional<ProceduralSpec> procedural;
  double t0 = 0.0;
  double dt = 0.0;
  double row_readout = 0.0;       // t_r
  double midpoint = 0.0;          // t
  int misalign_rows = 0;
  int n_frames = 9;
  std::string out_dir;
};

/// Parses and validates a manifest; file/field problems are reported as
/// IoError with the offending field named.
SceneManifest load_manifest(const std::filesystem::path& path);

/// Frames from a manifest: either the referenced PNG directory or the
/// procedural scene rendered densely enough to cover both exposure windows.
FrameStack load_stack(const SceneManifest& manifest);

/// Frame sequence loader shared by eval and profile-rows: accepts a .drsc
/// cube file, or a directory containing frames.drsc or frame_*.png.
/// `quantized` reports whether the data went through 8-bit PNG.
GsSequence load_sequence(const std::filesystem::path& path, bool& quantized);

}  // namespace dualrs
