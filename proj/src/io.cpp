#include "acr/io.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace acr {

namespace {

constexpr char kSpecMagic[8] = {'A', 'C', 'R', 'S', 'P', 'E', 'C', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF),
               static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_spectrogram(const std::string& path, const Spectrogram& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kSpecMagic, 8);
  put_u32(out, static_cast<uint32_t>(s.frames));
  put_u32(out, static_cast<uint32_t>(s.bins));
  std::vector<float> buf(s.values.begin(), s.values.end());
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw std::runtime_error("short write: " + path);
}

Spectrogram read_spectrogram(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open spectrogram: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kSpecMagic, 8) != 0) {
    throw std::runtime_error("bad spectrogram magic: " + path);
  }
  Spectrogram s;
  s.frames = static_cast<int>(get_u32(in));
  s.bins = static_cast<int>(get_u32(in));
  if (s.frames < 0 || s.bins <= 0 || s.bins > 1 << 16) {
    throw std::runtime_error("bad spectrogram header: " + path);
  }
  size_t count = static_cast<size_t>(s.frames) * s.bins;
  std::vector<float> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw std::runtime_error("truncated spectrogram: " + path);
  s.values.assign(buf.begin(), buf.end());
  return s;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  auto base = std::filesystem::path(path).parent_path();

  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  std::vector<ManifestEntry> entries;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("manifest line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    ManifestEntry e;
    e.id = j.at("id").get<std::string>();
    e.audio_path = resolve(j.at("audio").get<std::string>());
    e.lab_path = resolve(j.at("lab").get<std::string>());
    e.fold = j.at("fold").get<int>();
    e.duration = j.value("duration", 0.0);
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  auto base = std::filesystem::path(path).parent_path();
  for (const auto& e : entries) {
    nlohmann::json j;
    j["id"] = e.id;
    j["audio"] = std::filesystem::relative(e.audio_path, base).string();
    j["lab"] = std::filesystem::relative(e.lab_path, base).string();
    j["fold"] = e.fold;
    j["duration"] = e.duration;
    out << j.dump() << '\n';
  }
}

uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for hashing: " + path);
  uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::string spectrogram_cache_name(uint64_t audio_hash, const CqtParams& p) {
  std::ostringstream key;
  key << std::hex << audio_hash << std::dec << "_" << p.sample_rate << "_"
      << p.hop << "_" << p.bins << "_" << p.bins_per_octave << "_" << p.f_min
      << "_" << p.log_gain;
  return key.str() + ".spec";
}

std::filesystem::path cache_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ACR_CACHE_DIR"); env && *env) return env;
  return "acr_cache";
}

}  // namespace acr
