#include "mset/cli/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "mset/error.hpp"

namespace mset::cli {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'A', 'L', 'C'};

template <typename T>
void put(std::vector<char>& buf, T v) {
  const auto* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof(T));
}

void put_string(std::vector<char>& buf, const std::string& s) {
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(s.size()));
  buf.insert(buf.end(), s.begin(), s.end());
}

void put_entry(std::vector<char>& buf, const std::string& name, const num::Shape& shape,
               std::span<const double> values) {
  put_string(buf, name);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put<std::uint64_t>(buf, d);
  const auto* p = reinterpret_cast<const char*>(values.data());
  buf.insert(buf.end(), p, p + values.size() * sizeof(double));
}

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}

  void need(std::size_t n) const {
    if (pos_ + n > buf_.size())
      throw LoadError(LoadError::Kind::Truncated, "checkpoint truncated at byte " + std::to_string(pos_));
  }
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> get_doubles(std::size_t n) {
    need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), buf_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

struct Entry {
  num::Shape shape;
  std::vector<double> values;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto named = ckpt.params.named();
  if (ckpt.optimizer.first_moment.size() != named.size())
    throw DimensionError("save_checkpoint: optimizer state does not match parameter count");
  std::vector<char> buf(kMagic.begin(), kMagic.end());
  put<std::uint32_t>(buf, kCheckpointVersion);
  put_string(buf, to_json(ckpt.config, false).dump());
  put<std::uint64_t>(buf, ckpt.step);
  put<std::uint64_t>(buf, ckpt.optimizer.step);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(3 * named.size()));
  for (const auto& nt : named) put_entry(buf, nt.name, nt.tensor.shape(), nt.tensor.data());
  for (std::size_t i = 0; i < named.size(); ++i)
    put_entry(buf, "adam.m." + named[i].name, named[i].tensor.shape(), ckpt.optimizer.first_moment[i]);
  for (std::size_t i = 0; i < named.size(); ++i)
    put_entry(buf, "adam.v." + named[i].name, named[i].tensor.shape(), ckpt.optimizer.second_moment[i]);

  // Write-then-rename keeps the previous checkpoint intact if writing fails.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  Reader r(std::vector<char>(std::istreambuf_iterator<char>(in), {}));
  if (r.buffer().size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), r.buffer().begin()))
    throw LoadError(LoadError::Kind::BadMagic, "bad checkpoint magic in " + path.string());
  r.get<std::uint32_t>();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw LoadError(LoadError::Kind::VersionMismatch, "unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  try {
    ckpt.config = from_json(nlohmann::json::parse(r.get_string()));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(LoadError::Kind::Malformed, std::string("checkpoint config is not valid JSON: ") + e.what());
  }
  ckpt.step = r.get<std::uint64_t>();
  const auto adam_step = r.get<std::uint64_t>();
  const auto count = r.get<std::uint32_t>();
  std::map<std::string, Entry> entries;
  for (std::uint32_t e = 0; e < count; ++e) {
    std::string name = r.get_string();
    Entry entry;
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t k = 0; k < rank; ++k) entry.shape.push_back(r.get<std::uint64_t>());
    entry.values = r.get_doubles(num::shape_size(entry.shape));
    entries.emplace(std::move(name), std::move(entry));
  }
  if (r.remaining() != 0) throw LoadError(LoadError::Kind::Malformed, "trailing bytes in checkpoint");

  ckpt.params = ModelParams::init(ckpt.config.model, 0);
  auto named = ckpt.params.named();
  ckpt.optimizer.options = ckpt.config.adam;
  ckpt.optimizer.step = adam_step;
  auto take = [&](const std::string& name, const num::Shape& shape) -> std::vector<double>& {
    auto it = entries.find(name);
    if (it == entries.end()) throw LoadError(LoadError::Kind::Malformed, "checkpoint lacks entry '" + name + "'");
    if (it->second.shape != shape)
      throw LoadError(LoadError::Kind::Malformed, "checkpoint entry '" + name + "' has shape " +
                                                      num::shape_string(it->second.shape) + ", expected " +
                                                      num::shape_string(shape));
    return it->second.values;
  };
  for (auto& nt : named) {
    const auto& v = take(nt.name, nt.tensor.shape());
    std::copy(v.begin(), v.end(), nt.tensor.mutable_data().begin());
    ckpt.optimizer.first_moment.push_back(take("adam.m." + nt.name, nt.tensor.shape()));
    ckpt.optimizer.second_moment.push_back(take("adam.v." + nt.name, nt.tensor.shape()));
  }
  if (entries.size() != 3 * named.size())
    throw LoadError(LoadError::Kind::Malformed, "checkpoint carries unexpected entries");
  return ckpt;
}

}  // namespace mset::cli
