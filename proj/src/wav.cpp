#include "acr/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace acr {

namespace {

uint32_t read_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
  s.push_back(static_cast<char>((v >> 16) & 0xFF));
  s.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>((v >> 8) & 0xFF));
}

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open wav file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path);
  }

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_pos = 0, data_len = 0;

  size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    uint32_t chunk_len = read_u32(bytes.data() + pos + 4);
    const unsigned char* body = bytes.data() + pos + 8;
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0 && chunk_len >= 16) {
      format = read_u16(body);
      channels = read_u16(body + 2);
      rate = read_u32(body + 4);
      bits = read_u16(body + 14);
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data_pos = pos + 8;
      data_len = std::min<size_t>(chunk_len, bytes.size() - data_pos);
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }

  if (format != 1) throw std::runtime_error("wav is not integer PCM: " + path);
  if (bits != 16 && bits != 24) {
    throw std::runtime_error("unsupported wav bit depth (need 16 or 24): " +
                             path);
  }
  if (channels == 0 || data_pos == 0) {
    throw std::runtime_error("wav has no data chunk: " + path);
  }

  size_t bytes_per_sample = bits / 8;
  size_t frame_bytes = bytes_per_sample * channels;
  size_t n_frames = data_len / frame_bytes;

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(n_frames);
  const double scale16 = 1.0 / 32768.0;
  const double scale24 = 1.0 / 8388608.0;
  for (size_t f = 0; f < n_frames; ++f) {
    double acc = 0;
    const unsigned char* p = bytes.data() + data_pos + f * frame_bytes;
    for (int ch = 0; ch < channels; ++ch, p += bytes_per_sample) {
      if (bits == 16) {
        int16_t v = static_cast<int16_t>(p[0] | (p[1] << 8));
        acc += v * scale16;
      } else {
        int32_t v = static_cast<int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
        if (v & 0x800000) v |= ~0xFFFFFF;  // sign extend
        acc += v * scale24;
      }
    }
    w.samples[f] = acc / channels;
  }
  return w;
}

void write_wav16(const std::string& path, const Waveform& w) {
  std::string out;
  uint32_t data_len = static_cast<uint32_t>(w.samples.size() * 2);
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, static_cast<uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (double s : w.samples) {
    long v = std::lround(std::clamp(s, -1.0, 1.0) * 32768.0);
    v = std::clamp(v, -32768L, 32767L);
    put_u16(out, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace acr
