#include "dynres/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>

namespace dynres {

static_assert(std::endian::native == std::endian::little, "checkpoint layout assumes little-endian");

namespace {

constexpr char kMagic[8] = {'D', 'Y', 'N', 'R', 'E', 'S', 'C', 'K'};

void put_u32(std::string &out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

struct Reader {
  const std::string &s;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > s.size()) throw std::runtime_error("checkpoint: truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, s.data() + pos, 4);
    pos += 4;
    return v;
  }
};

}  // namespace

std::string encode_checkpoint(const std::vector<NamedTensor> &tensors) {
  std::string out(kMagic, 8);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto &t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.value.rows));
    put_u32(out, static_cast<std::uint32_t>(t.value.cols));
    out.append(reinterpret_cast<const char *>(t.value.data.data()), t.value.data.size() * sizeof(double));
  }
  return out;
}

std::vector<NamedTensor> decode_checkpoint(const std::string &bytes) {
  Reader r{bytes};
  r.need(8);
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) throw std::runtime_error("checkpoint: bad magic");
  r.pos = 8;
  if (r.u32() != 1) throw std::runtime_error("checkpoint: unsupported version");
  const std::uint32_t count = r.u32();
  std::vector<NamedTensor> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    const std::uint32_t len = r.u32();
    r.need(len);
    t.name.assign(bytes.data() + r.pos, len);
    r.pos += len;
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    t.value = ad::Matrix(rows, cols);
    const std::size_t nbytes = t.value.data.size() * sizeof(double);
    r.need(nbytes);
    std::memcpy(t.value.data.data(), bytes.data() + r.pos, nbytes);
    r.pos += nbytes;
    out.push_back(std::move(t));
  }
  if (r.pos != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
  return out;
}

std::string checkpoint_manifest(const std::vector<NamedTensor> &tensors, const Provenance &prov) {
  std::string s = "# config_hash=" + prov.config_hash +
                  " master_seed=" + std::to_string(prov.master_seed) + "\n";
  for (const auto &t : tensors)
    s += t.name + " " + std::to_string(t.value.rows) + " " + std::to_string(t.value.cols) + "\n";
  return s;
}

void save_checkpoint(const std::filesystem::path &path, const std::vector<NamedTensor> &tensors,
                     const Provenance &prov) {
  write_text_file(path, encode_checkpoint(tensors));
  write_text_file(path.string() + ".manifest", checkpoint_manifest(tensors, prov));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path &path) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("missing checkpoint: " + path.string());
  return decode_checkpoint(read_text_file(path));
}

const ad::Matrix &find_tensor(const std::vector<NamedTensor> &tensors, const std::string &name) {
  for (const auto &t : tensors)
    if (t.name == name) return t.value;
  throw std::runtime_error("checkpoint: missing tensor " + name);
}

}  // namespace dynres
