#include "core/image_io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace af::io {

namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint32_t get_u32(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void put_chunk(std::vector<uint8_t>& out, const char type[4],
               const std::vector<uint8_t>& payload) {
  put_u32(out, static_cast<uint32_t>(payload.size()));
  size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  uint32_t crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
  put_u32(out, crc);
}

std::vector<uint8_t> zlib_compress(const std::vector<uint8_t>& raw) {
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<uint8_t> out(bound);
  if (compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                Z_DEFAULT_COMPRESSION) != Z_OK)
    throw std::runtime_error("png: zlib compression failed");
  out.resize(bound);
  return out;
}

std::vector<uint8_t> zlib_decompress(const std::vector<uint8_t>& comp,
                                     size_t expected) {
  std::vector<uint8_t> out(expected);
  uLongf size = static_cast<uLongf>(expected);
  int rc = uncompress(out.data(), &size, comp.data(), static_cast<uLong>(comp.size()));
  if (rc != Z_OK || size != expected)
    throw std::runtime_error("png: zlib decompression failed");
  return out;
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

constexpr uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

Image from_rgb8(const std::vector<uint8_t>& rgb, int h, int w,
                ValueRange range) {
  std::vector<double> px(rgb.size());
  for (size_t i = 0; i < rgb.size(); ++i) px[i] = rgb[i] / 255.0;
  Image unit(h, w, ValueRange::Unit, std::move(px));
  return unit.to_range(range);
}

Image decode_ppm(const std::vector<uint8_t>& bytes, ValueRange range) {
  size_t p = 2;
  auto skip_ws = [&]() {
    while (p < bytes.size()) {
      if (bytes[p] == '#') {
        while (p < bytes.size() && bytes[p] != '\n') ++p;
      } else if (std::isspace(bytes[p])) {
        ++p;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() {
    skip_ws();
    int v = 0;
    bool any = false;
    while (p < bytes.size() && std::isdigit(bytes[p])) {
      v = v * 10 + (bytes[p++] - '0');
      any = true;
    }
    if (!any) throw std::runtime_error("ppm: malformed header");
    return v;
  };
  int w = read_int(), h = read_int(), maxval = read_int();
  if (maxval != 255) throw std::runtime_error("ppm: only maxval 255 supported");
  ++p;  // single whitespace after maxval
  size_t need = static_cast<size_t>(w) * h * 3;
  if (bytes.size() < p + need) throw std::runtime_error("ppm: truncated data");
  std::vector<uint8_t> rgb(bytes.begin() + p, bytes.begin() + p + need);
  return from_rgb8(rgb, h, w, range);
}

}  // namespace

std::vector<uint8_t> encode_png(const Image& img) {
  Image unit = img.to_range(ValueRange::Unit);
  const int h = unit.height(), w = unit.width();
  // filter type 0 on every row: simple and byte-stable
  std::vector<uint8_t> raw((static_cast<size_t>(w) * 3 + 1) * h);
  size_t i = 0;
  for (int y = 0; y < h; ++y) {
    raw[i++] = 0;
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        raw[i++] = static_cast<uint8_t>(
            std::lround(std::clamp(unit.at(y, x, c), 0.0, 1.0) * 255.0));
  }
  std::vector<uint8_t> out(kPngSig, kPngSig + 8);
  std::vector<uint8_t> ihdr;
  put_u32(ihdr, static_cast<uint32_t>(w));
  put_u32(ihdr, static_cast<uint32_t>(h));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // deflate
  ihdr.push_back(0);   // adaptive filtering
  ihdr.push_back(0);   // no interlace
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", zlib_compress(raw));
  put_chunk(out, "IEND", {});
  return out;
}

Image decode_png(const std::vector<uint8_t>& bytes, ValueRange range) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0)
    throw std::runtime_error("png: bad signature");
  size_t p = 8;
  int w = 0, h = 0, depth = 0, color = 0, interlace = 0;
  std::vector<uint8_t> idat;
  while (p + 12 <= bytes.size()) {
    uint32_t len = get_u32(&bytes[p]);
    if (p + 12 + len > bytes.size()) throw std::runtime_error("png: truncated chunk");
    const char* type = reinterpret_cast<const char*>(&bytes[p + 4]);
    const uint8_t* payload = &bytes[p + 8];
    if (std::memcmp(type, "IHDR", 4) == 0) {
      w = static_cast<int>(get_u32(payload));
      h = static_cast<int>(get_u32(payload + 4));
      depth = payload[8];
      color = payload[9];
      interlace = payload[12];
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      break;
    }
    p += 12 + len;
  }
  if (w < 1 || h < 1) throw std::runtime_error("png: missing IHDR");
  if (depth != 8) throw std::runtime_error("png: only 8-bit depth supported");
  if (interlace != 0) throw std::runtime_error("png: interlaced images unsupported");
  int nch;
  switch (color) {
    case 0: nch = 1; break;
    case 2: nch = 3; break;
    case 4: nch = 2; break;
    case 6: nch = 4; break;
    default: throw std::runtime_error("png: palette images unsupported");
  }
  size_t stride = static_cast<size_t>(w) * nch;
  std::vector<uint8_t> raw = zlib_decompress(idat, (stride + 1) * h);
  // unfilter in place
  std::vector<uint8_t> prev(stride, 0);
  std::vector<uint8_t> rgb(static_cast<size_t>(w) * h * 3);
  std::vector<uint8_t> cur(stride);
  for (int y = 0; y < h; ++y) {
    uint8_t filter = raw[(stride + 1) * y];
    const uint8_t* src = &raw[(stride + 1) * y + 1];
    for (size_t x = 0; x < stride; ++x) {
      int a = x >= static_cast<size_t>(nch) ? cur[x - nch] : 0;
      int b = prev[x];
      int c = x >= static_cast<size_t>(nch) ? prev[x - nch] : 0;
      int v;
      switch (filter) {
        case 0: v = src[x]; break;
        case 1: v = src[x] + a; break;
        case 2: v = src[x] + b; break;
        case 3: v = src[x] + (a + b) / 2; break;
        case 4: v = src[x] + paeth(a, b, c); break;
        default: throw std::runtime_error("png: unknown filter type");
      }
      cur[x] = static_cast<uint8_t>(v);
    }
    for (int x = 0; x < w; ++x) {
      uint8_t r, g, bl;
      const uint8_t* px = &cur[static_cast<size_t>(x) * nch];
      if (nch >= 3) {
        r = px[0]; g = px[1]; bl = px[2];
      } else {
        r = g = bl = px[0];
      }
      size_t o = (static_cast<size_t>(y) * w + x) * 3;
      rgb[o] = r; rgb[o + 1] = g; rgb[o + 2] = bl;
    }
    prev = cur;
  }
  return from_rgb8(rgb, h, w, range);
}

Image read_image(const std::string& path, ValueRange range) {
  auto bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0)
    return decode_png(bytes, range);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6')
    return decode_ppm(bytes, range);
  throw std::runtime_error("unsupported image format: " + path);
}

void write_png(const Image& img, const std::string& path) {
  write_file(path, encode_png(img));
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open file: " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(f),
                              std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write file: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write file: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace af::io
