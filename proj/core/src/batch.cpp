#include "scnn/batch.hpp"

#include <stdexcept>

#include "scnn/regressor.hpp"

namespace scnn {

double masked_count(const nn::Tensor<float>& density, const Mask* roi) {
  if (roi && (roi->height != density.height || roi->width != density.width))
    throw std::invalid_argument("masked_count: mask dims mismatch");
  double total = 0.0;
  for (size_t i = 0; i < density.data.size(); ++i) {
    if (roi && !roi->cells[i]) continue;
    total += density.data[i];
  }
  return total;
}

PreparedDataset prepare_dataset(const std::vector<Scene>& scenes, const PrepareOptions& opts) {
  opts.kernel.validate();
  if (opts.factor < 1) throw std::invalid_argument("prepare_dataset: factor must be >= 1");

  PreparedDataset out;
  out.grid = opts.grid;
  out.factor = opts.factor;

  for (size_t si = 0; si < scenes.size(); ++si) {
    const Scene& scene = scenes[si];
    scene.validate();
    if (scene.roi && scene.roi->count_true() == 0)
      throw std::invalid_argument("scene " + scene.id + ": ROI excludes the whole frame");

    const DensityMap full = make_density_map(scene.annotations, opts.kernel);
    std::vector<DensityMap> cells = split_density(full, opts.grid);
    std::vector<PatchRecord> patches = split_scene(scene, opts.grid);

    PreparedScene ps;
    ps.id = scene.id;
    ps.frame_height = scene.image.height;
    ps.frame_width = scene.image.width;

    for (size_t pi = 0; pi < patches.size(); ++pi) {
      PatchRecord& rec = patches[pi];
      TrainingBatch b;
      b.scene_id = scene.id;
      b.scene_index = static_cast<int>(si);
      b.grid_row = rec.grid_row;
      b.grid_col = rec.grid_col;
      b.pixels = image_to_tensor(rec.pixels);
      b.points = std::move(rec.points);
      b.interhead10 = patch_mean_interhead_distance(b.points, 10);

      b.target = downsample_preserving_count(cells[pi], opts.factor);
      b.target_t = nn::Tensor<float>(1, b.target.height, b.target.width);
      for (size_t i = 0; i < b.target.values.size(); ++i)
        b.target_t.data[i] = static_cast<float>(b.target.values[i]);

      if (rec.roi) {
        b.roi = downsample_nearest(*rec.roi, opts.factor);
        b.roi_t = nn::Tensor<float>(1, b.roi->height, b.roi->width);
        for (size_t i = 0; i < b.roi->cells.size(); ++i)
          b.roi_t->data[i] = b.roi->cells[i] ? 1.0f : 0.0f;
      }

      {
        Image patch_img(b.pixels.height, b.pixels.width);
        std::copy(b.pixels.data.begin(), b.pixels.data.end(), patch_img.pixels.begin());
        const Image resized =
            (patch_img.height == opts.switch_input_size && patch_img.width == opts.switch_input_size)
                ? patch_img
                : resize_bilinear(patch_img, opts.switch_input_size, opts.switch_input_size);
        b.switch_pixels = image_to_tensor(resized);
      }

      b.gt_count = predicted_count(b.target, b.roi ? &*b.roi : nullptr);
      ps.gt_count += b.gt_count;
      ps.batch_indices.push_back(out.batches.size());
      out.batches.push_back(std::move(b));
    }
    out.scenes.push_back(std::move(ps));
  }
  return out;
}

}  // namespace scnn
