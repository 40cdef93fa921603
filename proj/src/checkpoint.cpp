#include "cips3d/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace cips3d::ckpt {
namespace {

template <typename U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return value;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what + " at byte " +
                            std::to_string(pos_));
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

template <typename T>
std::string serialize(const ParamSet<T>& params) {
  std::string out(kMagic);
  put_le<std::uint32_t>(out, kFormatVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, entry] : params.entries()) {
    const auto& shape = entry.tensor.shape();
    if (name.size() > std::numeric_limits<std::uint16_t>::max() || shape.size() > 255)
      throw CheckpointError("tensor " + name + " cannot be stored (name or rank too large)");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    out.push_back(static_cast<char>(shape.size()));
    for (auto d : shape) {
      if (d > std::numeric_limits<std::uint32_t>::max()) throw CheckpointError("dimension too large in " + name);
      put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    out.push_back(static_cast<char>(kDtypeF32));
    for (T v : entry.tensor.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

ParamSet<float> deserialize(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size(), "magic") != kMagic) throw CheckpointError("not a checkpoint (bad magic)");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kFormatVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                          std::to_string(kFormatVersion) + ")");
  const auto count = in.get<std::uint32_t>("tensor count");
  ParamSet<float> params;
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto name_len = in.get<std::uint16_t>("name length");
    const std::string name(in.take(name_len, "name"));
    const auto rank = in.get<std::uint8_t>("rank");
    ad::Shape shape(rank);
    for (auto& d : shape) d = in.get<std::uint32_t>("dims");
    const auto dtype = in.get<std::uint8_t>("dtype");
    if (dtype != kDtypeF32) throw CheckpointError("tensor " + name + " has unsupported dtype " + std::to_string(dtype));
    std::vector<float> values(ad::shape_numel(shape));
    for (auto& v : values) v = std::bit_cast<float>(in.get<std::uint32_t>("data"));
    if (params.contains(name)) throw CheckpointError("duplicate tensor " + name);
    params.add(name, ad::Tensor<float>(shape, std::move(values)));
  }
  if (!in.done()) throw CheckpointError("trailing bytes after the last tensor");
  return params;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

template <typename T>
void save(const std::filesystem::path& path, const ParamSet<T>& params) {
  write_file_atomic(path, serialize(params));
}

ParamSet<float> load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

template std::string serialize<float>(const ParamSet<float>&);
template std::string serialize<double>(const ParamSet<double>&);
template void save<float>(const std::filesystem::path&, const ParamSet<float>&);
template void save<double>(const std::filesystem::path&, const ParamSet<double>&);

}  // namespace cips3d::ckpt
