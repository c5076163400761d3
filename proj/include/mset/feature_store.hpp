#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mset/datagen.hpp"

namespace mset {

// Little-endian chunk file:
//   "MALN" | u32 version=1 | u32 T | u32 C | T·C binary32 row-major
//   | u32 narration count | per narration: u32 concept, f64 t, f64 a, f64 b
inline constexpr std::uint32_t kFeatureStoreVersion = 1;

std::uintmax_t feature_file_size(std::size_t frames, std::size_t dim, std::size_t narrations);

void store_record(const VideoRecord& record, const std::filesystem::path& path);

// Duration, fps and id are not part of the chunk file; the manifest supplies them.
VideoRecord load_record(const std::filesystem::path& path, std::string video_id, double duration, double fps);

// The vocabulary uses the same layout with zero narrations.
void store_vocabulary(const ConceptVocabulary& vocab, const std::filesystem::path& path);
ConceptVocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace mset
