#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "selqa/params.hpp"

namespace selqa {

inline constexpr char kCheckpointMagic[9] = "SELQAMDL";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Model container: magic, u32 version, length-prefixed JSON metadata, u32
/// array count, then per array a length-prefixed name, u32 rank, u32 dims and
/// little-endian float32 values. Parameter flags live in the metadata.
struct Checkpoint {
    nlohmann::json meta;
    ParamSet<float> params;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace selqa
