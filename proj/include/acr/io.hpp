// On-disk containers: the spectrogram cache format and the dataset manifest.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "acr/features.hpp"

namespace acr {

// Binary spectrogram container, little-endian:
//   magic "ACRSPEC1" (8 bytes), u32 frames, u32 bins,
//   then frames*bins float32 values, row-major (frame-major).
void write_spectrogram(const std::string& path, const Spectrogram& s);
Spectrogram read_spectrogram(const std::string& path);

// Dataset manifest: one JSON object per line with keys
//   id (string), audio (path), lab (path), fold (int), duration (seconds).
// Relative paths resolve against the manifest's directory.
struct ManifestEntry {
  std::string id;
  std::string audio_path;
  std::string lab_path;
  int fold = 0;
  double duration = 0;
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

// FNV-1a over file bytes; cache keys combine it with the CQT parameters.
uint64_t hash_file(const std::string& path);
std::string spectrogram_cache_name(uint64_t audio_hash, const CqtParams& p);

// Cache directory: explicit flag value, else $ACR_CACHE_DIR, else
// "acr_cache" in the working directory.
std::filesystem::path cache_dir(const std::string& flag_value = {});

}  // namespace acr
