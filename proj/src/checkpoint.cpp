#include "tgk/checkpoint.hpp"

#include <fstream>

#include "tgk/binary_io.hpp"
#include "tgk/errors.hpp"

namespace tgk {

using namespace binary;

void write_checkpoint(std::ostream& out, const CnnModel& model) {
  CnnConfig expected = gesture_cnn_config(model.config().in_channels);
  expected.dropout_p = model.config().dropout_p;
  if (model.config() != expected) {
    throw ArgumentError("write_checkpoint: only the gesture architecture can be serialized");
  }
  out.write("TGKM", 4);
  put_uint<std::uint32_t>(out, kCheckpointVersion);
  put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(model.config().in_channels));
  for (double v : model.parameters()) put_f64(out, v);
}

CnnModel read_checkpoint(std::istream& in) {
  expect_magic(in, "TGKM");
  const auto version = get_uint<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto c_in = get_uint<std::uint32_t>(in);
  if (c_in != 122 && c_in != 366) {
    throw FormatError("checkpoint has " + std::to_string(c_in) + " input channels, expected 122 or 366");
  }
  CnnModel model(gesture_cnn_config(c_in));
  for (double& v : model.parameters()) v = get_f64(in);
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
  model.set_mode(Mode::Eval);
  return model;
}

void write_checkpoint(const std::filesystem::path& path, const CnnModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_checkpoint(out, model);
  if (!out) throw IoError("write failed: " + path.string());
}

CnnModel read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("checkpoint not found: " + path.string());
  return read_checkpoint(in);
}

}  // namespace tgk
