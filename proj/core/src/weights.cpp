#include "ccseg/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ccseg/error.hpp"

namespace ccseg {

namespace {

constexpr char kMagic[6] = {'C', 'C', 'S', 'E', 'G', '1'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) {
      throw LoadError(std::string("weights file truncated while reading ") + what);
    }
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str(std::size_t n) {
    need(n, "tensor name");
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void WeightStore::insert(const std::string& name, Tensor t) {
  if (name.empty()) throw ContractViolation("weights: empty tensor name");
  if (!entries_.emplace(name, std::move(t)).second) {
    throw ContractViolation("weights: duplicate tensor name '" + name + "'");
  }
}

const Tensor& WeightStore::get(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw LoadError("weights: missing tensor '" + name + "'");
  return it->second;
}

std::size_t WeightStore::erase_prefix(const std::string& prefix) {
  std::size_t n = 0;
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->first.starts_with(prefix)) {
      it = entries_.erase(it);
      ++n;
    } else {
      ++it;
    }
  }
  return n;
}

std::vector<std::uint8_t> WeightStore::encode() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u16(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, t] : entries_) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
    for (double v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

WeightStore WeightStore::decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw LoadError("weights: bad magic (expected CCSEG1)");
  }
  Reader in(bytes);
  in.str(sizeof(kMagic));
  const std::uint16_t version = in.u16("version");
  if (version != kVersion) {
    throw LoadError("weights: unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = in.u32("entry count");
  WeightStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::string name = in.str(in.u32("name length"));
    const std::uint32_t rank = in.u32("rank");
    Shape shape(rank);
    for (auto& d : shape) d = in.u32("extent");
    const std::size_t volume = shape_volume(shape);
    in.need(volume * 4, "payload");
    std::vector<double> data(volume);
    for (auto& v : data) v = static_cast<double>(std::bit_cast<float>(in.u32("payload")));
    if (store.contains(name)) throw LoadError("weights: duplicate tensor name '" + name + "'");
    store.entries_.emplace(name, Tensor(std::move(shape), std::move(data)));
  }
  if (!in.done()) {
    throw LoadError("weights: " + std::to_string(bytes.size() - in.pos()) +
                    " trailing bytes after last entry");
  }
  return store;
}

void WeightStore::save(const std::filesystem::path& path) const {
  const auto bytes = encode();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

WeightStore WeightStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace ccseg
