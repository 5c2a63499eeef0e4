#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "tgk/gestures.hpp"

namespace tgk {

// Little-endian dataset file:
//   header  : "TGK1" | u32 version | u32 n_recordings | u32 frames (122) | u32 taxels (49)
//   records : u8 label | u16 user_id | u64 seed | f32[frames][taxels][3] forces (x, y, z)
// Recording ids are positions in the file.
inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(std::ostream& out, const std::vector<GestureRecording>& recordings);
std::vector<GestureRecording> read_dataset(std::istream& in);

void write_dataset(const std::filesystem::path& path, const std::vector<GestureRecording>& recordings);
std::vector<GestureRecording> read_dataset(const std::filesystem::path& path);

}  // namespace tgk
