#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "tgk/nn.hpp"

namespace tgk {

// Little-endian checkpoint: "TGKM" | u32 version | u32 c_in | f64 parameters in
// declared order (conv kernel, conv bias, fc1 W, fc1 b, fc2 W, fc2 b).
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const CnnModel& model);
CnnModel read_checkpoint(std::istream& in);

void write_checkpoint(const std::filesystem::path& path, const CnnModel& model);
CnnModel read_checkpoint(const std::filesystem::path& path);

}  // namespace tgk
