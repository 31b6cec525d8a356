#include "dynrf/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "dynrf/io_image.hpp"

namespace dynrf::data {

namespace {

std::string frame_name(int index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d%s", index, ext);
  return buf;
}

}  // namespace

void Dataset::validate() const {
  camera.validate();
  if (frames.empty()) throw std::invalid_argument("dataset: no frames");
  const int T = frame_count();
  for (int i = 0; i < T; ++i) {
    const Frame& f = frames[i];
    if (f.index != i + 1) throw std::invalid_argument("dataset: frame indices not contiguous");
    if (f.image.width != camera.width || f.image.height != camera.height)
      throw std::invalid_argument("dataset: image resolution mismatch at frame " +
                                  std::to_string(f.index));
    if (f.depth.width != camera.width || f.depth.height != camera.height)
      throw std::invalid_argument("dataset: depth resolution mismatch at frame " +
                                  std::to_string(f.index));
    if (has_masks && (f.mask.width != camera.width || f.mask.height != camera.height))
      throw std::invalid_argument("dataset: mask resolution mismatch at frame " +
                                  std::to_string(f.index));
    if (!(f.t >= 0.0 && f.t <= 1.0))
      throw std::invalid_argument("dataset: frame time outside [0,1]");
  }
}

double frame_time(int index, int total, bool zero_based) {
  if (zero_based) return total > 1 ? double(index - 1) / double(total - 1) : 0.0;
  return double(index) / double(total);
}

Dataset load_dataset(const std::filesystem::path& dir, bool require_masks,
                     bool zero_based_times) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("dataset: no such directory " + dir.string());

  Dataset ds;
  ds.camera = render::load_camera(dir / "camera.json");

  const fs::path images = dir / "images";
  const fs::path depths = dir / "depth";
  const fs::path masks = dir / "masks";
  const fs::path boxes_file = dir / "boxes.json";

  // Count contiguous frames by the image files present.
  int T = 0;
  while (fs::exists(images / frame_name(T + 1, ".png"))) ++T;
  if (T == 0) throw std::runtime_error("dataset: no frames under " + images.string());
  {
    // A gap would silently truncate; detect frames beyond the contiguous run.
    int pngs = 0;
    for (const auto& entry : fs::directory_iterator(images))
      if (entry.is_regular_file() && entry.path().extension() == ".png") ++pngs;
    if (pngs != T)
      throw std::runtime_error("dataset: frame indices not contiguous from 000001 in " +
                               images.string());
  }

  bool have_mask_dir = fs::is_directory(masks);
  if (have_mask_dir) {
    for (int i = 1; i <= T; ++i) {
      if (!fs::exists(masks / frame_name(i, ".png"))) {
        if (require_masks)
          throw std::runtime_error("dataset: missing mask for frame " + std::to_string(i));
        have_mask_dir = false;  // incomplete masks are ignored when not required
        break;
      }
    }
  }
  std::vector<std::array<int, 4>> boxes;
  if (!have_mask_dir && fs::exists(boxes_file)) {
    std::ifstream in(boxes_file);
    nlohmann::json j;
    in >> j;
    for (const auto& row : j) {
      if (!row.is_array() || row.size() != 4)
        throw std::runtime_error("dataset: boxes.json entries must be [u0,v0,u1,v1]");
      boxes.push_back({row[0].get<int>(), row[1].get<int>(), row[2].get<int>(), row[3].get<int>()});
    }
    if (int(boxes.size()) != T)
      throw std::runtime_error("dataset: boxes.json must list one box per frame");
  }
  ds.has_masks = have_mask_dir || !boxes.empty();
  if (require_masks && !ds.has_masks)
    throw std::runtime_error("dataset: masks required but neither masks/ nor boxes.json found");

  for (int i = 1; i <= T; ++i) {
    Frame f;
    f.index = i;
    f.t = frame_time(i, T, zero_based_times);
    f.image = io::load_png_rgb(images / frame_name(i, ".png"));

    const fs::path depth_path = depths / frame_name(i, ".pfm");
    if (!fs::exists(depth_path))
      throw std::runtime_error("dataset: missing depth for frame " + std::to_string(i));
    f.depth = io::load_pfm(depth_path);

    if (have_mask_dir) {
      f.mask = io::load_png_mask(masks / frame_name(i, ".png"));
    } else if (!boxes.empty()) {
      const auto& b = boxes[i - 1];
      f.mask = refine::box_to_mask(b[0], b[1], b[2], b[3], ds.camera.width, ds.camera.height);
    }
    ds.frames.push_back(std::move(f));
  }

  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  dataset.validate();
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "depth");
  if (dataset.has_masks) fs::create_directories(dir / "masks");

  render::save_camera(dataset.camera, dir / "camera.json");
  for (const Frame& f : dataset.frames) {
    io::save_png_rgb(f.image, dir / "images" / frame_name(f.index, ".png"));
    io::save_pfm(f.depth, dir / "depth" / frame_name(f.index, ".pfm"));
    if (dataset.has_masks) io::save_png_mask(f.mask, dir / "masks" / frame_name(f.index, ".png"));
  }
}

}  // namespace dynrf::data
