#include "core/jpeg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace af::jpeg {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Annex K base quantization tables, row major.
constexpr int kLumaQuant[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

constexpr int kChromaQuant[64] = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

constexpr int kZigzag[64] = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

// Annex K Huffman specifications: 16 length counts followed by symbols.
constexpr uint8_t kDcLumaBits[17] = {0, 0, 1, 5, 1, 1, 1, 1, 1,
                                     1, 0, 0, 0, 0, 0, 0, 0};
constexpr uint8_t kDcLumaVals[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};

constexpr uint8_t kDcChromaBits[17] = {0, 0, 3, 1, 1, 1, 1, 1, 1,
                                       1, 1, 1, 0, 0, 0, 0, 0};
constexpr uint8_t kDcChromaVals[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};

constexpr uint8_t kAcLumaBits[17] = {0, 0, 2, 1, 3, 3, 2, 4, 3,
                                     5, 5, 4, 4, 0, 0, 1, 0x7d};
constexpr uint8_t kAcLumaVals[162] = {
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
    0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08,
    0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72,
    0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75,
    0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3,
    0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6,
    0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9,
    0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2,
    0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4,
    0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa};

constexpr uint8_t kAcChromaBits[17] = {0, 0, 2, 1, 2, 4, 4, 3, 4,
                                       7, 5, 4, 4, 0, 1, 2, 0x77};
constexpr uint8_t kAcChromaVals[162] = {
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41,
    0x51, 0x07, 0x61, 0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91,
    0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33, 0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1,
    0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18, 0x19, 0x1a, 0x26,
    0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44,
    0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58,
    0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74,
    0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a,
    0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4,
    0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7,
    0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda,
    0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4,
    0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa};

struct CosTable {
  double c[8][8];  // c[x][u] = cos((2x+1) u pi / 16)
  CosTable() {
    for (int x = 0; x < 8; ++x)
      for (int u = 0; u < 8; ++u)
        c[x][u] = std::cos((2 * x + 1) * u * kPi / 16.0);
  }
};
const CosTable kCos;

void fdct8x8(double blk[64]) {
  double tmp[64];
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += blk[y * 8 + x] * kCos.c[x][u];
      tmp[y * 8 + u] = s * (u == 0 ? 1.0 / std::sqrt(2.0) : 1.0) * 0.5;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += tmp[y * 8 + u] * kCos.c[y][v];
      blk[v * 8 + u] = s * (v == 0 ? 1.0 / std::sqrt(2.0) : 1.0) * 0.5;
    }
}

void idct8x8(double blk[64]) {
  double tmp[64];
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u)
        s += blk[v * 8 + u] * kCos.c[x][u] *
             (u == 0 ? 1.0 / std::sqrt(2.0) : 1.0);
      tmp[v * 8 + x] = s * 0.5;
    }
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v)
        s += tmp[v * 8 + x] * kCos.c[y][v] *
             (v == 0 ? 1.0 / std::sqrt(2.0) : 1.0);
      blk[y * 8 + x] = s * 0.5;
    }
}

std::array<int, 64> scaled_quant(const int* base, int quality) {
  quality = std::clamp(quality, 1, 100);
  int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> q{};
  for (int i = 0; i < 64; ++i)
    q[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
  return q;
}

int bit_size(int v) {
  int a = std::abs(v), n = 0;
  while (a) {
    ++n;
    a >>= 1;
  }
  return n;
}

// ---------------------------------------------------------------- encoder

struct HuffCode {
  uint16_t code[256];
  uint8_t size[256];
};

HuffCode build_codes(const uint8_t* bits, const uint8_t* vals, int nvals) {
  HuffCode hc{};
  int code = 0, k = 0;
  for (int len = 1; len <= 16; ++len) {
    for (int i = 0; i < bits[len]; ++i) {
      hc.code[vals[k]] = static_cast<uint16_t>(code);
      hc.size[vals[k]] = static_cast<uint8_t>(len);
      ++code;
      ++k;
    }
    code <<= 1;
  }
  (void)nvals;
  return hc;
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<uint8_t>& out) : out_(out) {}

  void put(int code, int size) {
    acc_ = (acc_ << size) | (static_cast<uint32_t>(code) & ((1u << size) - 1));
    nbits_ += size;
    while (nbits_ >= 8) {
      uint8_t byte = static_cast<uint8_t>((acc_ >> (nbits_ - 8)) & 0xff);
      out_.push_back(byte);
      if (byte == 0xff) out_.push_back(0x00);  // byte stuffing
      nbits_ -= 8;
    }
  }

  void flush() {
    if (nbits_ > 0) put((1 << (8 - nbits_)) - 1, 8 - nbits_);  // pad with 1s
  }

 private:
  std::vector<uint8_t>& out_;
  uint64_t acc_ = 0;
  int nbits_ = 0;
};

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v & 0xff));
}

void put_marker(std::vector<uint8_t>& out, uint8_t m) {
  out.push_back(0xff);
  out.push_back(m);
}

void encode_block(BitWriter& bw, const double* samples, int stride,
                  const std::array<int, 64>& quant, const HuffCode& dc,
                  const HuffCode& ac, int& pred) {
  double blk[64];
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) blk[y * 8 + x] = samples[y * stride + x] - 128.0;
  fdct8x8(blk);
  int coeff[64];
  for (int i = 0; i < 64; ++i) {
    double q = blk[kZigzag[i]] / quant[kZigzag[i]];
    coeff[i] = static_cast<int>(std::lround(q));
  }
  int diff = coeff[0] - pred;
  pred = coeff[0];
  int s = bit_size(diff);
  bw.put(dc.code[s], dc.size[s]);
  if (s) bw.put(diff < 0 ? diff + (1 << s) - 1 : diff, s);
  int run = 0;
  for (int i = 1; i < 64; ++i) {
    if (coeff[i] == 0) {
      ++run;
      continue;
    }
    while (run > 15) {
      bw.put(ac.code[0xf0], ac.size[0xf0]);  // ZRL
      run -= 16;
    }
    int as = bit_size(coeff[i]);
    int sym = (run << 4) | as;
    bw.put(ac.code[sym], ac.size[sym]);
    bw.put(coeff[i] < 0 ? coeff[i] + (1 << as) - 1 : coeff[i], as);
    run = 0;
  }
  if (run > 0) bw.put(ac.code[0x00], ac.size[0x00]);  // EOB
}

// ---------------------------------------------------------------- decoder

struct HuffDecoder {
  // code lookup via canonical (length, first-code) walk
  int mincode[17], maxcode[17], valptr[17];
  uint8_t vals[256];
  bool valid = false;

  void build(const uint8_t counts[17], const uint8_t* symbols, int total) {
    std::memcpy(vals, symbols, static_cast<size_t>(total));
    int code = 0, k = 0;
    for (int len = 1; len <= 16; ++len) {
      valptr[len] = k;
      mincode[len] = code;
      code += counts[len];
      k += counts[len];
      maxcode[len] = code - 1;
      if (counts[len] == 0) maxcode[len] = -1;
      code <<= 1;
    }
    valid = true;
  }
};

class BitReader {
 public:
  BitReader(const std::vector<uint8_t>* data, size_t pos)
      : data_(data), pos_(pos) {}

  int bit() {
    if (nbits_ == 0) {
      if (pos_ >= data_->size()) throw std::runtime_error("jpeg: truncated scan");
      uint8_t byte = (*data_)[pos_++];
      if (byte == 0xff) {
        if (pos_ >= data_->size()) throw std::runtime_error("jpeg: truncated scan");
        uint8_t next = (*data_)[pos_];
        if (next == 0x00) {
          ++pos_;  // stuffed byte
        } else {
          // marker reached: rewind and feed zero bits so a well-formed
          // stream can finish its final MCU
          --pos_;
          byte = 0;
        }
      }
      acc_ = byte;
      nbits_ = 8;
    }
    --nbits_;
    return (acc_ >> nbits_) & 1;
  }

  int bits(int n) {
    int v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | bit();
    return v;
  }

  // Discard partial byte at a restart boundary and step over the RST marker.
  void restart() {
    nbits_ = 0;
    if (pos_ + 1 < data_->size() && (*data_)[pos_] == 0xff &&
        (*data_)[pos_ + 1] >= 0xd0 && (*data_)[pos_ + 1] <= 0xd7)
      pos_ += 2;
  }

 private:
  const std::vector<uint8_t>* data_;
  size_t pos_;
  uint32_t acc_ = 0;
  int nbits_ = 0;
};

int decode_huff(BitReader& br, const HuffDecoder& h) {
  int code = br.bit();
  for (int len = 1; len <= 16; ++len) {
    if (h.maxcode[len] >= 0 && code <= h.maxcode[len])
      return h.vals[h.valptr[len] + code - h.mincode[len]];
    code = (code << 1) | br.bit();
  }
  throw std::runtime_error("jpeg: bad Huffman code");
}

int receive_extend(BitReader& br, int s) {
  if (s == 0) return 0;
  int v = br.bits(s);
  if (v < (1 << (s - 1))) v += -(1 << s) + 1;
  return v;
}

struct Component {
  int id = 0, hsamp = 1, vsamp = 1, quant_id = 0;
  int dc_id = 0, ac_id = 0;
  int width = 0, height = 0;          // component resolution incl. padding
  std::vector<double> samples;
  int pred = 0;
};

uint16_t read_u16(const std::vector<uint8_t>& d, size_t& p) {
  if (p + 2 > d.size()) throw std::runtime_error("jpeg: truncated header");
  uint16_t v = static_cast<uint16_t>((d[p] << 8) | d[p + 1]);
  p += 2;
  return v;
}

}  // namespace

const char* codec_id() { return "af-jpeg/1 baseline 4:2:0 annexK huffman"; }

std::vector<uint8_t> encode(const Image& img, int quality) {
  const int h = img.height(), w = img.width();
  require(h >= 1 && w >= 1 && h <= 65500 && w <= 65500,
          "jpeg: unsupported image dimensions");
  Image unit = img.to_range(ValueRange::Unit);

  // RGB -> YCbCr on the 0..255 scale (JFIF)
  const int ph = (h + 15) / 16 * 16, pw = (w + 15) / 16 * 16;
  std::vector<double> Y(static_cast<size_t>(ph) * pw);
  std::vector<double> Cb(Y.size()), Cr(Y.size());
  for (int y = 0; y < ph; ++y) {
    int sy = std::min(y, h - 1);
    for (int x = 0; x < pw; ++x) {
      int sx = std::min(x, w - 1);
      double r = unit.at(sy, sx, 0) * 255.0;
      double g = unit.at(sy, sx, 1) * 255.0;
      double b = unit.at(sy, sx, 2) * 255.0;
      size_t i = static_cast<size_t>(y) * pw + x;
      Y[i] = 0.299 * r + 0.587 * g + 0.114 * b;
      Cb[i] = -0.168735892 * r - 0.331264108 * g + 0.5 * b + 128.0;
      Cr[i] = 0.5 * r - 0.418687589 * g - 0.081312411 * b + 128.0;
    }
  }
  // 4:2:0 chroma: 2x2 box average
  const int ch = ph / 2, cw = pw / 2;
  std::vector<double> cb2(static_cast<size_t>(ch) * cw), cr2(cb2.size());
  for (int y = 0; y < ch; ++y)
    for (int x = 0; x < cw; ++x) {
      size_t a = static_cast<size_t>(2 * y) * pw + 2 * x;
      size_t b = a + pw;
      cb2[static_cast<size_t>(y) * cw + x] =
          0.25 * (Cb[a] + Cb[a + 1] + Cb[b] + Cb[b + 1]);
      cr2[static_cast<size_t>(y) * cw + x] =
          0.25 * (Cr[a] + Cr[a + 1] + Cr[b] + Cr[b + 1]);
    }

  auto lq = scaled_quant(kLumaQuant, quality);
  auto cq = scaled_quant(kChromaQuant, quality);
  HuffCode dcl = build_codes(kDcLumaBits, kDcLumaVals, 12);
  HuffCode dcc = build_codes(kDcChromaBits, kDcChromaVals, 12);
  HuffCode acl = build_codes(kAcLumaBits, kAcLumaVals, 162);
  HuffCode acc = build_codes(kAcChromaBits, kAcChromaVals, 162);

  std::vector<uint8_t> out;
  out.reserve(static_cast<size_t>(h) * w / 2 + 1024);
  put_marker(out, 0xd8);  // SOI
  // APP0 JFIF
  put_marker(out, 0xe0);
  put_u16(out, 16);
  const char jfif[5] = {'J', 'F', 'I', 'F', 0};
  out.insert(out.end(), jfif, jfif + 5);
  out.push_back(1);
  out.push_back(1);   // version 1.1
  out.push_back(0);   // aspect-ratio units
  put_u16(out, 1);
  put_u16(out, 1);
  out.push_back(0);
  out.push_back(0);   // no thumbnail
  // DQT
  put_marker(out, 0xdb);
  put_u16(out, 2 + 2 * 65);
  out.push_back(0x00);
  for (int i = 0; i < 64; ++i) out.push_back(static_cast<uint8_t>(lq[kZigzag[i]]));
  out.push_back(0x01);
  for (int i = 0; i < 64; ++i) out.push_back(static_cast<uint8_t>(cq[kZigzag[i]]));
  // SOF0
  put_marker(out, 0xc0);
  put_u16(out, 8 + 3 * 3);
  out.push_back(8);
  put_u16(out, static_cast<uint16_t>(h));
  put_u16(out, static_cast<uint16_t>(w));
  out.push_back(3);
  out.push_back(1); out.push_back(0x22); out.push_back(0);  // Y
  out.push_back(2); out.push_back(0x11); out.push_back(1);  // Cb
  out.push_back(3); out.push_back(0x11); out.push_back(1);  // Cr
  // DHT x4
  auto put_dht = [&out](int cls, int id, const uint8_t* bits, const uint8_t* vals) {
    int total = 0;
    for (int i = 1; i <= 16; ++i) total += bits[i];
    put_marker(out, 0xc4);
    put_u16(out, static_cast<uint16_t>(2 + 1 + 16 + total));
    out.push_back(static_cast<uint8_t>((cls << 4) | id));
    for (int i = 1; i <= 16; ++i) out.push_back(bits[i]);
    out.insert(out.end(), vals, vals + total);
  };
  put_dht(0, 0, kDcLumaBits, kDcLumaVals);
  put_dht(1, 0, kAcLumaBits, kAcLumaVals);
  put_dht(0, 1, kDcChromaBits, kDcChromaVals);
  put_dht(1, 1, kAcChromaBits, kAcChromaVals);
  // SOS
  put_marker(out, 0xda);
  put_u16(out, 6 + 2 * 3);
  out.push_back(3);
  out.push_back(1); out.push_back(0x00);
  out.push_back(2); out.push_back(0x11);
  out.push_back(3); out.push_back(0x11);
  out.push_back(0);
  out.push_back(63);
  out.push_back(0);

  BitWriter bw(out);
  int predY = 0, predCb = 0, predCr = 0;
  for (int my = 0; my < ph / 16; ++my) {
    for (int mx = 0; mx < pw / 16; ++mx) {
      for (int by = 0; by < 2; ++by)
        for (int bx = 0; bx < 2; ++bx) {
          const double* base =
              Y.data() + static_cast<size_t>(my * 16 + by * 8) * pw + mx * 16 + bx * 8;
          encode_block(bw, base, pw, lq, dcl, acl, predY);
        }
      const double* cbb =
          cb2.data() + static_cast<size_t>(my * 8) * cw + mx * 8;
      encode_block(bw, cbb, cw, cq, dcc, acc, predCb);
      const double* crb =
          cr2.data() + static_cast<size_t>(my * 8) * cw + mx * 8;
      encode_block(bw, crb, cw, cq, dcc, acc, predCr);
    }
  }
  bw.flush();
  put_marker(out, 0xd9);  // EOI
  return out;
}

Image decode(const std::vector<uint8_t>& bytes, ValueRange range) {
  size_t p = 0;
  auto expect_marker = [&]() -> uint8_t {
    if (p >= bytes.size() || bytes[p] != 0xff)
      throw std::runtime_error("jpeg: bad marker");
    while (p < bytes.size() && bytes[p] == 0xff) ++p;
    if (p >= bytes.size()) throw std::runtime_error("jpeg: bad marker");
    return bytes[p++];
  };
  if (bytes.size() < 4 || bytes[0] != 0xff || bytes[1] != 0xd8)
    throw std::runtime_error("jpeg: missing SOI");
  p = 2;

  std::array<std::array<int, 64>, 4> quant{};
  std::array<HuffDecoder, 4> dc_tables, ac_tables;
  std::vector<Component> comps;
  int width = 0, height = 0, restart_interval = 0;
  int hmax = 1, vmax = 1;

  while (true) {
    uint8_t m = expect_marker();
    if (m == 0xd9) throw std::runtime_error("jpeg: no scan data");
    if (m == 0x01 || (m >= 0xd0 && m <= 0xd7)) continue;  // standalone
    size_t seg_start = p;
    uint16_t len = read_u16(bytes, p);
    size_t seg_end = seg_start + len;
    if (seg_end > bytes.size()) throw std::runtime_error("jpeg: truncated segment");
    if (m == 0xdb) {
      while (p < seg_end) {
        int pq = bytes[p] >> 4, tq = bytes[p] & 0x0f;
        ++p;
        if (pq != 0) throw std::runtime_error("jpeg: 16-bit quant tables unsupported");
        if (tq > 3) throw std::runtime_error("jpeg: bad quant table id");
        for (int i = 0; i < 64; ++i) quant[tq][kZigzag[i]] = bytes[p + i];
        p += 64;
      }
    } else if (m == 0xc4) {
      while (p < seg_end) {
        int cls = bytes[p] >> 4, id = bytes[p] & 0x0f;
        ++p;
        if (cls > 1 || id > 3) throw std::runtime_error("jpeg: bad Huffman table spec");
        uint8_t counts[17] = {0};
        int total = 0;
        for (int i = 1; i <= 16; ++i) {
          counts[i] = bytes[p + i - 1];
          total += counts[i];
        }
        p += 16;
        if (total > 256 || p + total > seg_end)
          throw std::runtime_error("jpeg: bad Huffman table");
        (cls == 0 ? dc_tables[id] : ac_tables[id]).build(counts, &bytes[p], total);
        p += total;
      }
    } else if (m == 0xc0 || m == 0xc1) {
      if (bytes[p] != 8) throw std::runtime_error("jpeg: only 8-bit samples supported");
      ++p;
      height = read_u16(bytes, p);
      width = read_u16(bytes, p);
      int ncomp = bytes[p++];
      if (ncomp != 1 && ncomp != 3)
        throw std::runtime_error("jpeg: unsupported component count");
      comps.resize(ncomp);
      for (auto& c : comps) {
        c.id = bytes[p++];
        c.hsamp = bytes[p] >> 4;
        c.vsamp = bytes[p] & 0x0f;
        ++p;
        c.quant_id = bytes[p++];
        if (c.hsamp < 1 || c.hsamp > 2 || c.vsamp < 1 || c.vsamp > 2)
          throw std::runtime_error("jpeg: unsupported sampling factor");
        if (c.quant_id > 3) throw std::runtime_error("jpeg: bad quant table id");
        hmax = std::max(hmax, c.hsamp);
        vmax = std::max(vmax, c.vsamp);
      }
    } else if (m >= 0xc2 && m <= 0xcf && m != 0xc4 && m != 0xc8 && m != 0xcc) {
      throw std::runtime_error("jpeg: only baseline (SOF0/SOF1) supported");
    } else if (m == 0xdd) {
      restart_interval = read_u16(bytes, p);
    } else if (m == 0xda) {
      int ns = bytes[p++];
      if (ns != static_cast<int>(comps.size()))
        throw std::runtime_error("jpeg: partial scans unsupported");
      for (int i = 0; i < ns; ++i) {
        int id = bytes[p++];
        int tables = bytes[p++];
        bool found = false;
        for (auto& c : comps)
          if (c.id == id) {
            c.dc_id = tables >> 4;
            c.ac_id = tables & 0x0f;
            if (c.dc_id > 3 || c.ac_id > 3)
              throw std::runtime_error("jpeg: bad Huffman table id");
            found = true;
          }
        if (!found) throw std::runtime_error("jpeg: scan references unknown component");
      }
      p += 3;  // spectral selection + approximation (baseline: fixed)
      break;
    } else {
      p = seg_end;  // skip APPn/COM/unknown
    }
  }

  if (width < 1 || height < 1) throw std::runtime_error("jpeg: missing SOF");
  const int mcu_w = 8 * hmax, mcu_h = 8 * vmax;
  const int mcus_x = (width + mcu_w - 1) / mcu_w;
  const int mcus_y = (height + mcu_h - 1) / mcu_h;
  for (auto& c : comps) {
    c.width = mcus_x * 8 * c.hsamp;
    c.height = mcus_y * 8 * c.vsamp;
    c.samples.assign(static_cast<size_t>(c.width) * c.height, 0.0);
  }

  BitReader br(&bytes, p);
  int mcu_index = 0;
  double blk[64];
  for (int my = 0; my < mcus_y; ++my) {
    for (int mx = 0; mx < mcus_x; ++mx) {
      if (restart_interval && mcu_index && mcu_index % restart_interval == 0) {
        br.restart();
        for (auto& c : comps) c.pred = 0;
      }
      ++mcu_index;
      for (auto& c : comps) {
        const auto& dct = dc_tables[c.dc_id];
        const auto& act = ac_tables[c.ac_id];
        if (!dct.valid || !act.valid)
          throw std::runtime_error("jpeg: scan uses undefined Huffman table");
        for (int by = 0; by < c.vsamp; ++by) {
          for (int bx = 0; bx < c.hsamp; ++bx) {
            std::fill(std::begin(blk), std::end(blk), 0.0);
            int s = decode_huff(br, dct);
            int diff = receive_extend(br, s);
            c.pred += diff;
            blk[0] = static_cast<double>(c.pred) * quant[c.quant_id][0];
            int k = 1;
            while (k < 64) {
              int rs = decode_huff(br, act);
              int r = rs >> 4, sz = rs & 0x0f;
              if (sz == 0) {
                if (r == 15) {
                  k += 16;
                  continue;
                }
                break;  // EOB
              }
              k += r;
              if (k > 63) throw std::runtime_error("jpeg: coefficient overflow");
              int val = receive_extend(br, sz);
              blk[kZigzag[k]] = static_cast<double>(val) * quant[c.quant_id][kZigzag[k]];
              ++k;
            }
            idct8x8(blk);
            int ox = (mx * c.hsamp + bx) * 8;
            int oy = (my * c.vsamp + by) * 8;
            for (int yy = 0; yy < 8; ++yy)
              for (int xx = 0; xx < 8; ++xx)
                c.samples[static_cast<size_t>(oy + yy) * c.width + ox + xx] =
                    blk[yy * 8 + xx] + 128.0;
          }
        }
      }
    }
  }

  std::vector<double> out(static_cast<size_t>(height) * width * 3);
  auto sample = [&](const Component& c, int y, int x) {
    int cy = std::min(y * c.vsamp / vmax, c.height - 1);
    int cx = std::min(x * c.hsamp / hmax, c.width - 1);
    return c.samples[static_cast<size_t>(cy) * c.width + cx];
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double r, g, b;
      if (comps.size() == 1) {
        r = g = b = sample(comps[0], y, x);
      } else {
        double Y = sample(comps[0], y, x);
        double cb = sample(comps[1], y, x) - 128.0;
        double cr = sample(comps[2], y, x) - 128.0;
        r = Y + 1.402 * cr;
        g = Y - 0.344136286 * cb - 0.714136286 * cr;
        b = Y + 1.772 * cb;
      }
      size_t i = (static_cast<size_t>(y) * width + x) * 3;
      out[i] = std::clamp(r, 0.0, 255.0) / 255.0;
      out[i + 1] = std::clamp(g, 0.0, 255.0) / 255.0;
      out[i + 2] = std::clamp(b, 0.0, 255.0) / 255.0;
    }
  }
  Image unit(height, width, ValueRange::Unit, std::move(out));
  return unit.to_range(range);
}

Image roundtrip(const Image& img, int quality) {
  require(quality >= 1 && quality <= 100, "jpeg quality must be in [1,100]");
  return decode(encode(img, quality), img.range());
}

}  // namespace af::jpeg
