#include "soma/dqn.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace soma {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'O', 'M', 'A', 'Q', 'N', 'E', 'T'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw TruncatedFile("checkpoint: file ends early");
  }
  const char* take(std::size_t n) {
    need(n);
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const QNetwork<float>& net, const std::filesystem::path& path) {
  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.layout()));
  put_u32(out, static_cast<std::uint32_t>(net.shapes().size()));
  for (const auto& s : net.shapes()) {
    put_u32(out, static_cast<std::uint32_t>(s.out));
    put_u32(out, static_cast<std::uint32_t>(s.in));
  }
  const auto& p = net.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(p[i]));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("checkpoint: write failed for " + path.string());
}

QNetwork<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("checkpoint: cannot open " + path.string());
  Reader r(std::string(std::istreambuf_iterator<char>(f), {}));

  if (std::memcmp(r.take(kMagic.size()), kMagic.data(), kMagic.size()) != 0)
    throw BadMagic("checkpoint: bad magic in " + path.string());
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t layout = r.u32();
  if (layout > static_cast<std::uint32_t>(HeadLayout::Flat))
    throw ShapeMismatch("checkpoint: unknown head layout " + std::to_string(layout));

  QNetwork<float> net(static_cast<HeadLayout>(layout));
  const std::uint32_t layers = r.u32();
  if (layers != net.shapes().size())
    throw ShapeMismatch("checkpoint: expected " + std::to_string(net.shapes().size()) +
                        " layers, found " + std::to_string(layers));
  for (const auto& expected : net.shapes()) {
    const LayerShape got{static_cast<int>(r.u32()), static_cast<int>(r.u32())};
    if (got != expected)
      throw ShapeMismatch("checkpoint: layer " + std::to_string(got.out) + "x" +
                          std::to_string(got.in) + " where " + std::to_string(expected.out) + "x" +
                          std::to_string(expected.in) + " was expected");
  }
  auto& p = net.parameters();
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::bit_cast<float>(r.u32());
  if (!r.at_end()) throw CheckpointError("checkpoint: trailing bytes after parameters");
  return net;
}

}  // namespace soma
