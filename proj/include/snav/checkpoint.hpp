#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "snav/autodiff.hpp"

namespace snav::inline SNAV_REAL_NS {

inline constexpr std::uint32_t kCheckpointVersion = 1;
// Entry holding the JSON header (agent config, run metadata). Its payload is
// the UTF-8 text padded with spaces to a multiple of four bytes.
inline constexpr std::string_view kHeaderEntry = "@header";

struct Checkpoint {
  nlohmann::json header;
  ParamSet params;
};

// Little-endian: "SNAVCKPT", u32 version, u32 entry count, then per entry
// u16 name length, name, u8 rank, u32 dims, f32 payload in row-major order.
std::string encode_checkpoint(const ParamSet& params, const nlohmann::json& header);
Checkpoint decode_checkpoint(std::string_view bytes);  // throws FormatError

void save_checkpoint(const std::filesystem::path& path, const ParamSet& params, const nlohmann::json& header);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace snav::inline SNAV_REAL_NS
