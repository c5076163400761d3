#include "mset/feature_store.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "mset/error.hpp"

static_assert(std::endian::native == std::endian::little, "feature store assumes a little-endian host");

namespace mset {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'A', 'L', 'N'};
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kNarrationBytes = 4 + 3 * 8;

template <typename T>
void put(std::vector<char>& buf, T v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

class Reader {
 public:
  Reader(const std::vector<char>& buf, const std::filesystem::path& path) : buf_(buf), path_(path) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > buf_.size())
      throw LoadError(LoadError::Kind::Truncated, "truncated feature file " + path_.string() + " at byte " +
                                                      std::to_string(pos_));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  const std::vector<char>& buf_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, const std::vector<char>& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<char>(std::istreambuf_iterator<char>(in), {});
}

std::vector<char> encode(const num::Tensor& features, const std::vector<Narration>& narrations) {
  const std::size_t frames = features.shape()[0], dim = features.shape()[1];
  std::vector<char> buf;
  buf.reserve(feature_file_size(frames, dim, narrations.size()));
  buf.insert(buf.end(), kMagic.begin(), kMagic.end());
  put<std::uint32_t>(buf, kFeatureStoreVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(frames));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(dim));
  for (double v : features.data()) put<float>(buf, static_cast<float>(v));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(narrations.size()));
  for (const auto& n : narrations) {
    put<std::uint32_t>(buf, n.concept_id);
    put<double>(buf, n.t);
    put<double>(buf, n.a);
    put<double>(buf, n.b);
  }
  return buf;
}

struct Decoded {
  num::Tensor features;
  std::vector<Narration> narrations;
};

Decoded decode(const std::vector<char>& buf, const std::filesystem::path& path) {
  if (buf.size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), buf.begin()))
    throw LoadError(LoadError::Kind::BadMagic, "bad magic in " + path.string());
  Reader r(buf, path);
  r.get<std::uint32_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kFeatureStoreVersion)
    throw LoadError(LoadError::Kind::VersionMismatch,
                    "unsupported feature-store version " + std::to_string(version) + " in " + path.string());
  const std::size_t frames = r.get<std::uint32_t>();
  const std::size_t dim = r.get<std::uint32_t>();
  if (frames == 0 || dim == 0)
    throw LoadError(LoadError::Kind::Malformed, "empty feature matrix in " + path.string());
  if (r.remaining() < frames * dim * sizeof(float))
    throw LoadError(LoadError::Kind::Truncated, "truncated feature payload in " + path.string());
  std::vector<double> data(frames * dim);
  for (auto& v : data) v = static_cast<double>(r.get<float>());
  Decoded d{num::Tensor({frames, dim}, std::move(data)), {}};
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    Narration n;
    n.concept_id = r.get<std::uint32_t>();
    n.t = r.get<double>();
    n.a = r.get<double>();
    n.b = r.get<double>();
    d.narrations.push_back(n);
  }
  if (r.remaining() != 0)
    throw LoadError(LoadError::Kind::Malformed, "trailing bytes in " + path.string());
  return d;
}

}  // namespace

std::uintmax_t feature_file_size(std::size_t frames, std::size_t dim, std::size_t narrations) {
  return kHeaderBytes + frames * dim * 4 + 4 + narrations * kNarrationBytes;
}

void store_record(const VideoRecord& record, const std::filesystem::path& path) {
  write_file(path, encode(record.features, record.narrations));
}

VideoRecord load_record(const std::filesystem::path& path, std::string video_id, double duration, double fps) {
  auto d = decode(read_file(path), path);
  VideoRecord rec;
  rec.video_id = std::move(video_id);
  rec.duration = duration;
  rec.fps = fps;
  rec.features = std::move(d.features);
  rec.narrations = std::move(d.narrations);
  return rec;
}

void store_vocabulary(const ConceptVocabulary& vocab, const std::filesystem::path& path) {
  write_file(path, encode(vocab.vectors(), {}));
}

ConceptVocabulary load_vocabulary(const std::filesystem::path& path) {
  auto d = decode(read_file(path), path);
  if (!d.narrations.empty())
    throw LoadError(LoadError::Kind::Malformed, "vocabulary file carries narrations: " + path.string());
  return ConceptVocabulary(std::move(d.features));
}

}  // namespace mset
