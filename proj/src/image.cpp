#include "fprig/image.hpp"

#include <algorithm>
#include <cctype>

#include "fprig/error.hpp"

namespace fprig {

namespace {

constexpr int kBlurRadius = 5;  // 11x11
constexpr int kBlurPasses = 3;

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int integer() {
    skip_space_and_comments();
    std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1 << 20) throw Error(ErrorCode::format, "PPM header value too large");
      ++pos_;
    }
    if (pos_ == start) throw Error(ErrorCode::format, "PPM header: expected integer");
    return static_cast<int>(value);
  }

  std::size_t pos_ = 0;

 private:
  std::string_view bytes_;
};

void blur_region(Image& img, const Box& b) {
  const int w = b.w;
  const int h = b.h;
  std::vector<int> src(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto* p = img.pixel(b.x + x, b.y + y);
      for (int c = 0; c < 3; ++c) src[(static_cast<std::size_t>(y) * w + x) * 3 + c] = p[c];
    }
  }
  std::vector<int> rows(src.size());
  const int area = (2 * kBlurRadius + 1) * (2 * kBlurRadius + 1);
  for (int pass = 0; pass < kBlurPasses; ++pass) {
    // Clamped 2D window sums factor into row sums then column sums.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          int sum = 0;
          for (int dx = -kBlurRadius; dx <= kBlurRadius; ++dx) {
            int xx = std::clamp(x + dx, 0, w - 1);
            sum += src[(static_cast<std::size_t>(y) * w + xx) * 3 + c];
          }
          rows[(static_cast<std::size_t>(y) * w + x) * 3 + c] = sum;
        }
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) {
          int sum = 0;
          for (int dy = -kBlurRadius; dy <= kBlurRadius; ++dy) {
            int yy = std::clamp(y + dy, 0, h - 1);
            sum += rows[(static_cast<std::size_t>(yy) * w + x) * 3 + c];
          }
          src[(static_cast<std::size_t>(y) * w + x) * 3 + c] = (sum + area / 2) / area;
        }
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto* p = img.pixel(b.x + x, b.y + y);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<std::uint8_t>(src[(static_cast<std::size_t>(y) * w + x) * 3 + c]);
    }
  }
}

}  // namespace

DecodedPpm decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw Error(ErrorCode::format, "not a binary PPM (P6)");
  HeaderReader in(bytes.substr(2));
  int width = in.integer();
  int height = in.integer();
  int maxval = in.integer();
  if (width <= 0 || height <= 0) throw Error(ErrorCode::format, "PPM dimensions must be positive");
  if (maxval != 255) throw Error(ErrorCode::format, "only 8-bit PPM supported");
  std::size_t offset = 2 + in.pos_;
  if (offset >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[offset]))) {
    throw Error(ErrorCode::format, "PPM header not terminated");
  }
  ++offset;
  std::size_t raster = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - offset != raster) throw Error(ErrorCode::format, "PPM raster size mismatch");
  DecodedPpm out;
  out.image.width = width;
  out.image.height = height;
  out.image.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
  out.pixel_offset = offset;
  return out;
}

std::string encode_ppm(const Image& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(image.rgb.data()), image.rgb.size());
  return out;
}

std::optional<Box> clip_box(const Box& box, int width, int height) {
  int x0 = std::max(box.x, 0);
  int y0 = std::max(box.y, 0);
  int x1 = std::min(box.x + box.w, width);
  int y1 = std::min(box.y + box.h, height);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return Box{x0, y0, x1 - x0, y1 - y0};
}

std::string blur_faces(std::string_view ppm_bytes, std::span<const Box> boxes) {
  auto decoded = decode_ppm(ppm_bytes);
  if (boxes.empty()) return std::string(ppm_bytes);
  Image& img = decoded.image;
  for (const auto& raw : boxes) {
    if (auto b = clip_box(raw, img.width, img.height)) blur_region(img, *b);
  }
  std::string out(ppm_bytes.substr(0, decoded.pixel_offset));
  out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  return out;
}

double region_variance(const Image& image, const Box& box) {
  auto b = clip_box(box, image.width, image.height);
  if (!b) return 0.0;
  double sum = 0.0;
  double sum2 = 0.0;
  std::size_t n = 0;
  for (int y = b->y; y < b->y + b->h; ++y) {
    for (int x = b->x; x < b->x + b->w; ++x) {
      const auto* p = image.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        sum += p[c];
        sum2 += static_cast<double>(p[c]) * p[c];
        ++n;
      }
    }
  }
  double mean = sum / static_cast<double>(n);
  return std::max(0.0, sum2 / static_cast<double>(n) - mean * mean);
}

}  // namespace fprig
