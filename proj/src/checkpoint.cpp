#include "snav/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "snav/error.hpp"
#include "snav/world_io.hpp"

namespace snav::inline SNAV_REAL_NS {

namespace {

constexpr std::string_view kMagic = "SNAVCKPT";

template <class T>
void put(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) { put(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(std::string_view b) : b_(b) {}

  template <class T>
  T get() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    const std::string_view s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

void put_entry_head(std::string& out, std::string_view name, std::initializer_list<std::uint32_t> dims) {
  if (name.size() > 0xffff) throw FormatError("parameter name too long");
  put(out, static_cast<std::uint16_t>(name.size()));
  out.append(name);
  put(out, static_cast<std::uint8_t>(dims.size()));
  for (std::uint32_t d : dims) put(out, d);
}

}  // namespace

std::string encode_checkpoint(const ParamSet& params, const nlohmann::json& header) {
  std::string out(kMagic);
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint32_t>(params.size() + 1));

  std::string text = header.dump();
  text.resize((text.size() + 3) / 4 * 4, ' ');
  put_entry_head(out, kHeaderEntry, {static_cast<std::uint32_t>(text.size() / 4)});
  out += text;

  for (const Parameter& p : params.all()) {
    if (p.name == kHeaderEntry) throw FormatError("parameter name collides with the header entry");
    put_entry_head(out, p.name, {static_cast<std::uint32_t>(p.value.rows()), static_cast<std::uint32_t>(p.value.cols())});
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) put_f32(out, static_cast<float>(p.value(r, c)));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  if (in.bytes(kMagic.size()) != kMagic) throw FormatError("not a checkpoint (bad magic)");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = in.get<std::uint32_t>();
  Checkpoint ck;
  bool have_header = false;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = in.get<std::uint16_t>();
    const std::string name(in.bytes(name_len));
    const auto rank = in.get<std::uint8_t>();
    if (rank < 1 || rank > 2) throw FormatError("entry '" + name + "' has unsupported rank " + std::to_string(rank));
    std::uint32_t dims[2] = {1, 1};
    for (int k = 0; k < rank; ++k) dims[k] = in.get<std::uint32_t>();
    const std::uint64_t n = static_cast<std::uint64_t>(dims[0]) * dims[1];
    if (name == kHeaderEntry) {
      if (rank != 1) throw FormatError("header entry must have rank 1");
      try {
        ck.header = nlohmann::json::parse(in.bytes(n * 4));
      } catch (const nlohmann::json::exception& ex) {
        throw FormatError(std::string("checkpoint header is not valid JSON: ") + ex.what());
      }
      have_header = true;
      continue;
    }
    // Rank-1 entries load as row vectors.
    const Eigen::Index rows = rank == 2 ? dims[0] : 1;
    const Eigen::Index cols = rank == 2 ? dims[1] : dims[0];
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = static_cast<real>(std::bit_cast<float>(in.get<std::uint32_t>()));
    try {
      ck.params.add(name, std::move(m));
    } catch (const ConfigurationError&) {
      throw FormatError("duplicate checkpoint entry '" + name + "'");
    }
  }
  if (!in.done()) throw FormatError("trailing bytes after the last checkpoint entry");
  if (!have_header) ck.header = nlohmann::json::object();
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, const nlohmann::json& header) {
  write_text_file(path, encode_checkpoint(params, header));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_text_file(path)); }

}  // namespace snav::inline SNAV_REAL_NS
