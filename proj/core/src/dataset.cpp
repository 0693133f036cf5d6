#include "scnn/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace scnn {

namespace fs = std::filesystem;
using nlohmann::json;

void Scene::validate() const {
  if (annotations.frame_height != image.height || annotations.frame_width != image.width)
    throw std::invalid_argument("scene " + id + ": annotation frame dims mismatch image");
  try {
    annotations.validate();
  } catch (const std::exception&) {
    throw std::invalid_argument("scene " + id + ": annotation outside image bounds");
  }
  if (roi && (roi->height != image.height || roi->width != image.width))
    throw std::invalid_argument("scene " + id + ": ROI dims mismatch image");
}

void SynthConfig::validate() const {
  if (num_scenes < 1) throw std::invalid_argument("SynthConfig: num_scenes must be >= 1");
  if (frame_height < grid.rows || frame_width < grid.cols)
    throw std::invalid_argument("SynthConfig: frame smaller than grid");
  if (regimes.empty()) throw std::invalid_argument("SynthConfig: at least one regime required");
  for (const RegimeConfig& r : regimes) {
    if (r.density_lo < 0 || r.density_hi < r.density_lo)
      throw std::invalid_argument("SynthConfig: bad density range in regime " + r.name);
    if (r.radius_lo <= 0 || r.radius_hi < r.radius_lo)
      throw std::invalid_argument("SynthConfig: bad radius range in regime " + r.name);
  }
}

SynthConfig SynthConfig::desk_default(uint64_t seed) {
  SynthConfig cfg;
  cfg.num_scenes = 90;
  cfg.frame_height = 120;
  cfg.frame_width = 120;
  cfg.seed = seed;
  // Large heads / strong facade-like texture when sparse; small dense blobs on
  // a flat background when crowded.
  cfg.regimes = {
      {"sparse", 0.0, 0.0025, 5.0, 7.0, 0.35},
      {"medium", 0.006, 0.011, 2.2, 3.2, 0.15},
      {"dense", 0.022, 0.038, 1.0, 1.6, 0.05},
  };
  return cfg;
}

namespace {

// Smooth background texture: coarse uniform grid, bilinearly upsampled.
void render_background(Image& img, int r0, int c0, int h, int w, double amp,
                       std::mt19937_64& rng) {
  constexpr int kStep = 8;
  const int gh = h / kStep + 2, gw = w / kStep + 2;
  std::vector<double> grid(static_cast<size_t>(gh) * gw);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (double& v : grid) v = uni(rng);
  for (int r = 0; r < h; ++r) {
    const double gr = static_cast<double>(r) / kStep;
    const int i0 = static_cast<int>(gr);
    const double fr = gr - i0;
    for (int c = 0; c < w; ++c) {
      const double gc = static_cast<double>(c) / kStep;
      const int j0 = static_cast<int>(gc);
      const double fc = gc - j0;
      const double top = grid[i0 * gw + j0] * (1 - fc) + grid[i0 * gw + j0 + 1] * fc;
      const double bot = grid[(i0 + 1) * gw + j0] * (1 - fc) + grid[(i0 + 1) * gw + j0 + 1] * fc;
      img.at(r0 + r, c0 + c) += static_cast<float>(amp * (top * (1 - fr) + bot * fr));
    }
  }
}

void render_blob(Image& img, double pr, double pc, double radius, double amp) {
  const double sigma = radius / 2.0;
  const int reach = static_cast<int>(std::ceil(3.0 * sigma));
  const int r0 = std::max(0, static_cast<int>(std::floor(pr)) - reach);
  const int r1 = std::min(img.height - 1, static_cast<int>(std::ceil(pr)) + reach);
  const int c0 = std::max(0, static_cast<int>(std::floor(pc)) - reach);
  const int c1 = std::min(img.width - 1, static_cast<int>(std::ceil(pc)) + reach);
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double d2 = (r - pr) * (r - pr) + (c - pc) * (c - pc);
      img.at(r, c) += static_cast<float>(amp * std::exp(-d2 * inv2s2));
    }
  }
}

std::string scene_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%04d", i);
  return buf;
}

}  // namespace

std::vector<Scene> generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  std::vector<Scene> scenes;
  scenes.reserve(cfg.num_scenes);
  const auto rb = cfg.grid.row_bounds(cfg.frame_height);
  const auto cb = cfg.grid.col_bounds(cfg.frame_width);

  for (int si = 0; si < cfg.num_scenes; ++si) {
    Scene scene;
    scene.id = scene_name(si);
    scene.image = Image(cfg.frame_height, cfg.frame_width, 0.0f);
    scene.annotations.frame_height = cfg.frame_height;
    scene.annotations.frame_width = cfg.frame_width;

    for (int gr = 0; gr < cfg.grid.rows; ++gr) {
      for (int gc = 0; gc < cfg.grid.cols; ++gc) {
        const int h = rb[gr + 1] - rb[gr], w = cb[gc + 1] - cb[gc];
        const size_t regime_idx =
            std::min(cfg.regimes.size() - 1,
                     static_cast<size_t>(uni(rng) * cfg.regimes.size()));
        const RegimeConfig& regime = cfg.regimes[regime_idx];

        render_background(scene.image, rb[gr], cb[gc], h, w, regime.texture_amp, rng);

        const double area = static_cast<double>(h) * w;
        const double density =
            regime.density_lo + uni(rng) * (regime.density_hi - regime.density_lo);
        const long count = std::lround(density * area);
        if (count > std::lround(area / 4.0))
          throw std::invalid_argument("infeasible density in regime " + regime.name + ": " +
                                      std::to_string(count) + " persons in " +
                                      std::to_string(static_cast<long>(area)) + " px^2");
        for (long p = 0; p < count; ++p) {
          const double pr = rb[gr] + uni(rng) * h;
          const double pc = cb[gc] + uni(rng) * w;
          const double radius =
              regime.radius_lo + uni(rng) * (regime.radius_hi - regime.radius_lo);
          const double amp = 0.55 + uni(rng) * 0.4;
          render_blob(scene.image, pr, pc, radius, amp);
          scene.annotations.points.push_back({std::min(pr, cfg.frame_height - 1e-6),
                                              std::min(pc, cfg.frame_width - 1e-6)});
        }
      }
    }
    for (float& v : scene.image.pixels) v = std::clamp(v, 0.0f, 1.0f);
    scene.validate();
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

DatasetSplit split_dataset(const std::vector<Scene>& scenes, double train_frac,
                           double val_frac, double test_frac, uint64_t seed) {
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw std::invalid_argument("split fractions must sum to 1");
  std::vector<size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const size_t n = scenes.size();
  size_t n_train = static_cast<size_t>(std::lround(n * train_frac));
  size_t n_val = static_cast<size_t>(std::lround(n * val_frac));
  n_train = std::min(n_train, n);
  n_val = std::min(n_val, n - n_train);

  DatasetSplit split;
  for (size_t i = 0; i < n; ++i) {
    const Scene& s = scenes[order[i]];
    if (i < n_train) split.train.push_back(s);
    else if (i < n_train + n_val) split.val.push_back(s);
    else split.test.push_back(s);
  }
  return split;
}

std::vector<std::pair<std::vector<Scene>, std::vector<Scene>>> kfold_splits(
    const std::vector<Scene>& scenes, int k, uint64_t seed) {
  if (k < 2 || static_cast<size_t>(k) > scenes.size())
    throw std::invalid_argument("kfold_splits: need 2 <= k <= number of scenes");
  std::vector<size_t> order(scenes.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::pair<std::vector<Scene>, std::vector<Scene>>> folds(k);
  for (int fold = 0; fold < k; ++fold) {
    for (size_t i = 0; i < order.size(); ++i) {
      if (static_cast<int>(i % k) == fold) folds[fold].second.push_back(scenes[order[i]]);
      else folds[fold].first.push_back(scenes[order[i]]);
    }
  }
  return folds;
}

std::vector<Scene> load_dataset(const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) throw std::runtime_error("cannot open manifest " + manifest_path);
  json doc;
  try {
    mf >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed manifest " + manifest_path + ": " + e.what());
  }
  const fs::path base = fs::path(manifest_path).parent_path();

  std::vector<Scene> scenes;
  for (const json& rec : doc.at("scenes")) {
    Scene scene;
    scene.id = rec.value("id", "");
    if (scene.id.empty()) throw std::runtime_error("manifest record missing id");
    const std::string img_rel = rec.value("image", "");
    if (img_rel.empty()) throw std::runtime_error("scene " + scene.id + ": missing image path");
    const fs::path img_path = base / img_rel;
    if (!fs::exists(img_path))
      throw std::runtime_error("scene " + scene.id + ": missing image " + img_path.string());
    scene.image = read_png_gray(img_path.string());

    scene.annotations.frame_height = scene.image.height;
    scene.annotations.frame_width = scene.image.width;
    for (const json& pt : rec.value("annotations", json::array())) {
      if (!pt.is_array() || pt.size() != 2)
        throw std::runtime_error("scene " + scene.id + ": annotation must be a [row, col] pair");
      scene.annotations.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    if (rec.contains("roi")) {
      const fs::path roi_path = base / rec.at("roi").get<std::string>();
      if (!fs::exists(roi_path))
        throw std::runtime_error("scene " + scene.id + ": missing ROI " + roi_path.string());
      scene.roi = read_png_mask(roi_path.string());
    }
    scene.validate();
    scenes.push_back(std::move(scene));
  }
  std::sort(scenes.begin(), scenes.end(),
            [](const Scene& a, const Scene& b) { return a.id < b.id; });
  return scenes;
}

void save_dataset(const std::string& manifest_path, const std::vector<Scene>& scenes) {
  const fs::path base = fs::path(manifest_path).parent_path();
  fs::create_directories(base / "images");
  bool any_roi = false;
  for (const Scene& s : scenes) any_roi = any_roi || s.roi.has_value();
  if (any_roi) fs::create_directories(base / "roi");

  json recs = json::array();
  for (const Scene& s : scenes) {
    const std::string img_rel = "images/" + s.id + ".png";
    write_png_gray((base / img_rel).string(), s.image);
    json rec;
    rec["id"] = s.id;
    rec["image"] = img_rel;
    json pts = json::array();
    for (const Point& p : s.annotations.points) pts.push_back({p.row, p.col});
    rec["annotations"] = pts;
    if (s.roi) {
      const std::string roi_rel = "roi/" + s.id + ".png";
      write_png_mask((base / roi_rel).string(), *s.roi);
      rec["roi"] = roi_rel;
    }
    recs.push_back(rec);
  }
  json doc;
  doc["scenes"] = recs;
  std::ofstream out(manifest_path);
  if (!out) throw std::runtime_error("cannot create manifest " + manifest_path);
  out << doc.dump(1) << "\n";
}

}  // namespace scnn
