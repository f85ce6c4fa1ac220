#include "dualrs/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualrs/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dualrs {

namespace {

fs::path temp_name(const fs::path& path) {
  return path.string() + ".tmp";
}

void commit(const fs::path& tmp, const fs::path& path) {
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("rename to " + path.string() + " failed: " + ec.message());
  }
}

struct PngWriteCtx {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriteCtx() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngReadCtx {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadCtx() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void save_png(const fs::path& path, const ImageBuf& img) {
  if (img.empty()) throw IoError("save_png: empty image");
  const fs::path tmp = temp_name(path);

  PngWriteCtx ctx;
  ctx.fp = std::fopen(tmp.c_str(), "wb");
  if (!ctx.fp) throw IoError("save_png: cannot open " + tmp.string());
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info || setjmp(png_jmpbuf(ctx.png))) {
    throw IoError("save_png: libpng failure for " + path.string());
  }
  png_init_io(ctx.png, ctx.fp);
  const int color = img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(ctx.png, ctx.info, img.width, img.height, 8, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(ctx.png, 6);
  png_write_info(ctx.png, ctx.info);

  std::vector<png_byte> row(static_cast<std::size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const float v = std::clamp(img.at(x, y, c), 0.0f, 1.0f);
        row[static_cast<std::size_t>(x) * img.channels + c] =
            static_cast<png_byte>(std::lround(v * 255.0f));
      }
    png_write_row(ctx.png, row.data());
  }
  png_write_end(ctx.png, nullptr);
  std::fclose(ctx.fp);
  ctx.fp = nullptr;
  commit(tmp, path);
}

ImageBuf load_png(const fs::path& path) {
  PngReadCtx ctx;
  ctx.fp = std::fopen(path.c_str(), "rb");
  if (!ctx.fp) throw IoError("load_png: cannot open " + path.string());
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.png || !ctx.info || setjmp(png_jmpbuf(ctx.png))) {
    throw IoError("load_png: libpng failure for " + path.string());
  }
  png_init_io(ctx.png, ctx.fp);
  png_read_info(ctx.png, ctx.info);

  png_set_expand(ctx.png);       // palette/bit-depth to 8-bit
  png_set_strip_16(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int width = static_cast<int>(png_get_image_width(ctx.png, ctx.info));
  const int height = static_cast<int>(png_get_image_height(ctx.png, ctx.info));
  const int channels = static_cast<int>(png_get_channels(ctx.png, ctx.info));
  if (channels != 1 && channels != 3) {
    throw IoError("load_png: unsupported channel count in " + path.string());
  }

  ImageBuf img(width, height, channels);
  std::vector<png_byte> row(static_cast<std::size_t>(width) * channels);
  for (int y = 0; y < height; ++y) {
    png_read_row(ctx.png, row.data(), nullptr);
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) {
        img.at(x, y, c) =
            static_cast<float>(row[static_cast<std::size_t>(x) * channels + c]) / 255.0f;
      }
  }
  png_read_end(ctx.png, nullptr);
  return img;
}

void save_cube(const fs::path& path, const Cube& cube) {
  if (cube.empty()) throw IoError("save_cube: empty cube");
  std::string blob;
  blob.reserve(5 + 16 + cube.data.size() * 4);
  blob.append("DRSC1");
  put_u32le(blob, static_cast<std::uint32_t>(cube.n_frames));
  put_u32le(blob, static_cast<std::uint32_t>(cube.height));
  put_u32le(blob, static_cast<std::uint32_t>(cube.width));
  put_u32le(blob, static_cast<std::uint32_t>(cube.channels));
  for (float v : cube.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32le(blob, bits);
  }
  write_text_atomic(path, blob);
}

Cube load_cube(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_cube: cannot open " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < 21 || blob.compare(0, 5, "DRSC1") != 0) {
    throw IoError("load_cube: " + path.string() + " is not a DRSC1 cube file");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data()) + 5;
  const std::uint32_t n = get_u32le(p), h = get_u32le(p + 4), w = get_u32le(p + 8),
                      c = get_u32le(p + 12);
  const std::size_t count = static_cast<std::size_t>(n) * h * w * c;
  if (blob.size() != 21 + count * 4) {
    throw IoError("load_cube: payload size mismatch in " + path.string());
  }
  Cube cube(static_cast<int>(n), static_cast<int>(h), static_cast<int>(w),
            static_cast<int>(c));
  const unsigned char* q = p + 16;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t bits = get_u32le(q + i * 4);
    std::memcpy(&cube.data[i], &bits, 4);
  }
  return cube;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = temp_name(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  commit(tmp, path);
}

Scene ProceduralSpec::build() const {
  if (kind == "noise") return smooth_noise_scene(seed, vx, vy);
  if (kind == "bar") {
    return bar_scene(width / 2.0, bar_width, edge_width, vx, tilt, height / 2.0);
  }
  if (kind == "line") return line_scene(width / 2.0, 1.0, vx);
  throw IoError("procedural.kind must be noise, bar or line (got \"" + kind + "\")");
}

namespace {

template <typename T>
T require(const json& j, const std::string& field) {
  if (!j.contains(field)) throw IoError("manifest: missing field \"" + field + "\"");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception& e) {
    throw IoError("manifest: bad field \"" + field + "\": " + e.what());
  }
}

}  // namespace

SceneManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("manifest: cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("manifest: parse error in " + path.string() + ": " + e.what());
  }

  SceneManifest m;
  m.schema_version = j.value("schema_version", 1);
  m.scene_id = j.value("scene", std::string("scene"));
  m.t0 = require<double>(j, "t0");
  m.dt = require<double>(j, "dt");
  m.row_readout = require<double>(j, "t_r");
  m.midpoint = require<double>(j, "t");
  m.misalign_rows = j.value("misalign_rows", 0);
  m.n_frames = j.value("n_frames", 9);
  m.out_dir = j.value("out_dir", std::string());

  if (!(m.dt > 0)) throw IoError("manifest: dt must be > 0");
  if (!(m.row_readout > 0)) throw IoError("manifest: t_r must be > 0");
  if (m.n_frames < 1) throw IoError("manifest: n_frames must be >= 1");

  const bool has_dir = j.contains("stack_dir");
  const bool has_proc = j.contains("procedural");
  if (has_dir == has_proc) {
    throw IoError("manifest: exactly one of stack_dir / procedural is required");
  }
  if (has_dir) {
    m.stack_dir = require<std::string>(j, "stack_dir");
    fs::path dir = m.stack_dir;
    if (dir.is_relative()) dir = path.parent_path() / dir;
    m.stack_dir = dir.string();
    if (!fs::is_directory(m.stack_dir)) {
      throw IoError("manifest: stack_dir \"" + m.stack_dir + "\" does not exist");
    }
  } else {
    const json& p = j.at("procedural");
    ProceduralSpec spec;
    spec.kind = require<std::string>(p, "kind");
    spec.seed = p.value("seed", 1ULL);
    spec.width = p.value("width", 256);
    spec.height = p.value("height", 256);
    spec.vx = p.value("vx", 0.0);
    spec.vy = p.value("vy", 0.0);
    spec.bar_width = p.value("bar_width", 20.0);
    spec.edge_width = p.value("edge_width", 3.0);
    spec.tilt = p.value("tilt", 0.0);
    spec.build();  // validates kind
    m.procedural = spec;
  }
  return m;
}

FrameStack load_stack(const SceneManifest& m) {
  if (m.procedural) {
    // Cover both exposure windows, whichever way the misalignment shifts.
    RsConfig cfg{m.procedural->height, m.row_readout, m.midpoint, ScanDirection::T2B};
    const double shift = m.misalign_rows * m.row_readout;
    const double lo = std::min(cfg.start_time(), cfg.start_time() + shift);
    const double hi = std::max(cfg.end_time(), cfg.end_time() + shift);
    return render_stack_covering(m.procedural->build(), m.procedural->width,
                                 m.procedural->height, lo, hi, m.dt, m.t0);
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(m.stack_dir)) {
    if (entry.path().extension() == ".png") files.push_back(entry.path());
  }
  if (files.size() < 2) {
    throw IoError("stack_dir \"" + m.stack_dir + "\" holds fewer than 2 PNG frames");
  }
  std::sort(files.begin(), files.end());
  FrameStack stack;
  stack.t0 = m.t0;
  stack.dt = m.dt;
  stack.frames.reserve(files.size());
  for (const auto& f : files) stack.frames.push_back(load_png(f));
  stack.validate();
  return stack;
}

GsSequence load_sequence(const fs::path& path, bool& quantized) {
  GsSequence seq;
  quantized = false;

  auto from_cube = [&](const fs::path& p) {
    const Cube cube = load_cube(p);
    for (int n = 0; n < cube.n_frames; ++n) seq.frames.push_back(cube.slice(n));
  };

  if (fs::is_directory(path)) {
    const fs::path cube_path = path / "frames.drsc";
    if (fs::exists(cube_path)) {
      from_cube(cube_path);
    } else {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(path)) {
        const auto name = entry.path().filename().string();
        if (entry.path().extension() == ".png" && name.rfind("frame_", 0) == 0) {
          files.push_back(entry.path());
        }
      }
      if (files.empty()) {
        throw IoError("no frames.drsc or frame_*.png under " + path.string());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) seq.frames.push_back(load_png(f));
      quantized = true;
    }
  } else if (path.extension() == ".drsc") {
    from_cube(path);
  } else {
    seq.frames.push_back(load_png(path));
    quantized = true;
  }
  seq.instants.resize(seq.frames.size(), 0.0);
  return seq;
}

}  // namespace dualrs
