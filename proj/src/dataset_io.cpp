#include "tgk/dataset_io.hpp"

#include <fstream>

#include "tgk/binary_io.hpp"
#include "tgk/errors.hpp"

namespace tgk {

using namespace binary;

void write_dataset(std::ostream& out, const std::vector<GestureRecording>& recordings) {
  out.write("TGK1", 4);
  put_uint<std::uint32_t>(out, kDatasetVersion);
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(recordings.size()));
  put_uint<std::uint32_t>(out, kFramesPerRecording);
  put_uint<std::uint32_t>(out, kTaxelCount);
  for (const auto& rec : recordings) {
    if (rec.frames.size() != kFramesPerRecording) {
      throw ShapeError("write_dataset: recording " + std::to_string(rec.recording_id) + " has " +
                       std::to_string(rec.frames.size()) + " frames");
    }
    put_uint<std::uint8_t>(out, static_cast<std::uint8_t>(rec.label));
    put_uint<std::uint16_t>(out, static_cast<std::uint16_t>(rec.user_id));
    put_uint<std::uint64_t>(out, rec.seed);
    for (const auto& frame : rec.frames) {
      for (const auto& f : frame.forces) {
        put_f32(out, static_cast<float>(f.fx));
        put_f32(out, static_cast<float>(f.fy));
        put_f32(out, static_cast<float>(f.fz));
      }
    }
  }
}

std::vector<GestureRecording> read_dataset(std::istream& in) {
  expect_magic(in, "TGK1");
  const auto version = get_uint<std::uint32_t>(in);
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version));
  }
  const auto n = get_uint<std::uint32_t>(in);
  const auto frames = get_uint<std::uint32_t>(in);
  const auto taxels = get_uint<std::uint32_t>(in);
  if (frames != kFramesPerRecording || taxels != kTaxelCount) {
    throw FormatError("dataset shape " + std::to_string(frames) + "x" + std::to_string(taxels) +
                      " does not match 122x49");
  }
  std::vector<GestureRecording> out;
  out.reserve(n);
  for (std::uint32_t r = 0; r < n; ++r) {
    GestureRecording rec;
    rec.recording_id = r;
    const auto label = get_uint<std::uint8_t>(in);
    if (label >= kGestureClassCount) {
      throw FormatError("recording " + std::to_string(r) + " has label " + std::to_string(label));
    }
    rec.label = gesture_from_code(label);
    rec.user_id = get_uint<std::uint16_t>(in);
    rec.seed = get_uint<std::uint64_t>(in);
    rec.frames.resize(kFramesPerRecording);
    for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
      rec.frames[f].timestamp = static_cast<int>(f);
      for (auto& force : rec.frames[f].forces) {
        force.fx = get_f32(in);
        force.fy = get_f32(in);
        force.fz = get_f32(in);
      }
    }
    out.push_back(std::move(rec));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in dataset");
  return out;
}

void write_dataset(const std::filesystem::path& path,
                   const std::vector<GestureRecording>& recordings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_dataset(out, recordings);
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<GestureRecording> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("dataset file not found: " + path.string());
  return read_dataset(in);
}

}  // namespace tgk
