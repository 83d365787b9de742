#pragma once

#include <filesystem>
#include <vector>
#include <torch/torch.h>

namespace hybrur {

// Images are float tensors with channel-first layout. A single image is
// [C,H,W]; most operations also accept a batch [N,C,H,W].

/// 3-channel R,G,B image with values in [0,1].
struct ImageRGB {
  torch::Tensor data;  // [3,H,W]

  int64_t height() const { return data.size(-2); }
  int64_t width() const { return data.size(-1); }
};

/// Single-channel image, [1,H,W].
struct ImageGray {
  torch::Tensor data;

  int64_t height() const { return data.size(-2); }
  int64_t width() const { return data.size(-1); }
};

/// CIELab planes, each [H,W] (or [N,H,W] for batches).
struct ImageLab {
  torch::Tensor L;
  torch::Tensor a;
  torch::Tensor b;
};

/// Decode an 8-bit raster and bilinear-resize it to size x size.
/// Grayscale inputs are replicated to three channels.
ImageRGB load_image(const std::filesystem::path& path, int size);

/// Decode without resizing.
ImageRGB load_image_native(const std::filesystem::path& path);

/// Clamp to [0,1], quantize with round-half-up and write an 8-bit PNG.
void save_image(const std::filesystem::path& path, const torch::Tensor& img);

/// Bilinear resize (no antialiasing) of [C,H,W] or [N,C,H,W].
torch::Tensor resize_bilinear(const torch::Tensor& img, int64_t height, int64_t width);

/// Round-half-up 8-bit quantization, returned as float values k/255.
torch::Tensor quantize_8bit(const torch::Tensor& img);

/// sRGB (D65) to CIELab. Neutral inputs map to a = b = 0 exactly.
ImageLab rgb_to_lab(const ImageRGB& img);
ImageLab rgb_to_lab(const torch::Tensor& rgb);

/// ITU-R BT.601 luma.
ImageGray rgb_to_gray(const ImageRGB& img);
torch::Tensor rgb_to_gray(const torch::Tensor& rgb);

/// Tiles rows of images ([1,H,W] or [3,H,W], resized to tile x tile) into
/// one [3,H,W] canvas with `gap` pixels of background between tiles.
torch::Tensor compose_grid(const std::vector<std::vector<torch::Tensor>>& rows, int64_t tile = 256,
                           int64_t gap = 4, double background = 1.0);

/// True for extensions load_image can decode.
bool is_image_file(const std::filesystem::path& path);

/// Sorted list of decodable files directly inside dir.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace hybrur
