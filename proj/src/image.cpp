#include "hybrur/image.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "hybrur/errors.hpp"

namespace hybrur {

namespace {

namespace F = torch::nn::functional;

// sRGB primaries to XYZ. The white point is taken as the row sums so that
// (1,1,1) lands exactly on the reference white.
constexpr std::array<std::array<double, 3>, 3> kRgbToXyz{{
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
}};

double row_sum(int r) { return kRgbToXyz[r][0] + kRgbToXyz[r][1] + kRgbToXyz[r][2]; }

torch::Tensor srgb_to_linear(const torch::Tensor& v) {
  return torch::where(v <= 0.04045, v / 12.92, torch::pow((v + 0.055) / 1.055, 2.4));
}

torch::Tensor lab_f(const torch::Tensor& t) {
  constexpr double delta = 6.0 / 29.0;
  return torch::where(t > delta * delta * delta, torch::pow(t.clamp_min(0.0), 1.0 / 3.0),
                      t / (3.0 * delta * delta) + 4.0 / 29.0);
}

torch::Tensor mat_to_tensor(const cv::Mat& bgr8) {
  cv::Mat rgb;
  cv::cvtColor(bgr8, rgb, cv::COLOR_BGR2RGB);
  cv::Mat f;
  rgb.convertTo(f, CV_32FC3, 1.0 / 255.0);
  auto t = torch::from_blob(f.data, {f.rows, f.cols, 3}, torch::kFloat32).clone();
  return t.permute({2, 0, 1}).contiguous();
}

}  // namespace

ImageRGB load_image_native(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError(path.string(), "file does not exist");
  // IMREAD_COLOR replicates single-channel rasters and drops alpha.
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError(path.string(), "cannot decode image");
  if (bgr.depth() != CV_8U) bgr.convertTo(bgr, CV_8U);
  return ImageRGB{mat_to_tensor(bgr)};
}

ImageRGB load_image(const std::filesystem::path& path, int size) {
  if (size <= 0) throw ContractViolation("load_image: size must be positive");
  ImageRGB img = load_image_native(path);
  if (img.height() == size && img.width() == size) return img;
  return ImageRGB{resize_bilinear(img.data, size, size)};
}

torch::Tensor resize_bilinear(const torch::Tensor& img, int64_t height, int64_t width) {
  const bool single = img.dim() == 3;
  auto batch = single ? img.unsqueeze(0) : img;
  auto out = F::interpolate(batch, F::InterpolateFuncOptions()
                                       .size(std::vector<int64_t>{height, width})
                                       .mode(torch::kBilinear)
                                       .align_corners(false));
  return single ? out.squeeze(0) : out;
}

torch::Tensor quantize_8bit(const torch::Tensor& img) {
  return torch::floor(img.clamp(0.0, 1.0) * 255.0 + 0.5) / 255.0;
}

void save_image(const std::filesystem::path& path, const torch::Tensor& img) {
  auto t = img.detach().to(torch::kCPU, torch::kFloat64);
  if (t.dim() == 2) t = t.unsqueeze(0);
  if (t.dim() != 3 || (t.size(0) != 1 && t.size(0) != 3))
    throw ContractViolation("save_image: expected [1,H,W] or [3,H,W]");
  auto q = torch::floor(t.clamp(0.0, 1.0) * 255.0 + 0.5).to(torch::kUInt8);
  q = q.permute({1, 2, 0}).contiguous();
  const int h = static_cast<int>(q.size(0));
  const int w = static_cast<int>(q.size(1));
  const int c = static_cast<int>(q.size(2));
  cv::Mat m(h, w, c == 3 ? CV_8UC3 : CV_8UC1, q.data_ptr<uint8_t>());
  cv::Mat out;
  if (c == 3)
    cv::cvtColor(m, out, cv::COLOR_RGB2BGR);
  else
    out = m.clone();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), out)) throw IoError(path.string(), "cannot write image");
}

ImageLab rgb_to_lab(const torch::Tensor& rgb) {
  auto x = rgb.to(torch::kFloat64);
  const int64_t cdim = x.dim() - 3;
  auto lin = srgb_to_linear(x.clamp(0.0, 1.0));
  auto r = lin.select(cdim, 0);
  auto g = lin.select(cdim, 1);
  auto b = lin.select(cdim, 2);

  const auto& m = kRgbToXyz;
  const double xn = row_sum(0), yn = row_sum(1), zn = row_sum(2);
  auto yr = (m[1][0] * r + m[1][1] * g + m[1][2] * b) / yn;
  // X/Xn and Z/Zn written as offsets from Y/Yn driven by channel differences,
  // so equal channels give exactly Y/Yn.
  auto rg = r - g;
  auto bg = b - g;
  auto xr = yr + (m[0][0] / xn - m[1][0] / yn) * rg + (m[0][2] / xn - m[1][2] / yn) * bg;
  auto zr = yr + (m[2][0] / zn - m[1][0] / yn) * rg + (m[2][2] / zn - m[1][2] / yn) * bg;

  auto fx = lab_f(xr);
  auto fy = lab_f(yr);
  auto fz = lab_f(zr);
  return ImageLab{(116.0 * fy - 16.0).clamp(0.0, 100.0), 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

ImageLab rgb_to_lab(const ImageRGB& img) { return rgb_to_lab(img.data); }

torch::Tensor rgb_to_gray(const torch::Tensor& rgb) {
  const int64_t cdim = rgb.dim() - 3;
  return (0.299 * rgb.select(cdim, 0) + 0.587 * rgb.select(cdim, 1) + 0.114 * rgb.select(cdim, 2))
      .unsqueeze(cdim);
}

ImageGray rgb_to_gray(const ImageRGB& img) { return ImageGray{rgb_to_gray(img.data)}; }

torch::Tensor compose_grid(const std::vector<std::vector<torch::Tensor>>& rows, int64_t tile, int64_t gap,
                           double background) {
  std::size_t cols = 0;
  for (const auto& r : rows) cols = std::max(cols, r.size());
  const auto nr = static_cast<int64_t>(rows.size());
  const auto nc = static_cast<int64_t>(cols);
  if (nr == 0 || nc == 0) throw ContractViolation("compose_grid: no images");
  auto canvas = torch::full({3, nr * tile + (nr - 1) * gap, nc * tile + (nc - 1) * gap}, background, torch::kFloat32);
  for (int64_t r = 0; r < nr; ++r) {
    for (int64_t c = 0; c < static_cast<int64_t>(rows[r].size()); ++c) {
      auto img = rows[r][c].detach().to(torch::kCPU, torch::kFloat32);
      if (img.dim() == 2) img = img.unsqueeze(0);
      if (img.size(0) == 1) img = img.expand({3, img.size(1), img.size(2)});
      if (img.size(1) != tile || img.size(2) != tile) img = resize_bilinear(img.contiguous(), tile, tile);
      canvas.narrow(1, r * (tile + gap), tile).narrow(2, c * (tile + gap), tile).copy_(img.clamp(0.0, 1.0));
    }
  }
  return canvas;
}

bool is_image_file(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(dir.string(), "not a directory");
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hybrur
