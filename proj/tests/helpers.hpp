#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tgk/geometry.hpp"
#include "tgk/gestures.hpp"

namespace tgk::test {

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tgk_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::size_t count_substr(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

// Value of attribute `name` in every element that starts with `tag_prefix`.
inline std::vector<std::string> attr_values(const std::string& doc, const std::string& tag_prefix,
                                            const std::string& name) {
  std::vector<std::string> out;
  for (auto pos = doc.find(tag_prefix); pos != std::string::npos; pos = doc.find(tag_prefix, pos + 1)) {
    const auto end = doc.find('>', pos);
    const std::string tag = doc.substr(pos, end - pos);
    const auto a = tag.find(" " + name + "=\"");
    if (a == std::string::npos) continue;
    const auto v0 = a + name.size() + 3;
    out.push_back(tag.substr(v0, tag.find('"', v0) - v0));
  }
  return out;
}

inline double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

inline TactileFrame random_frame(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  TactileFrame f;
  for (auto& v : f.forces) v = {u(rng), u(rng), -std::abs(3 * u(rng))};
  return f;
}

inline GestureRecording zero_recording(GestureClass cls = GestureClass::Stroke) {
  GestureRecording r;
  r.label = cls;
  r.frames.resize(kFramesPerRecording);
  for (std::size_t f = 0; f < r.frames.size(); ++f) r.frames[f].timestamp = static_cast<int>(f);
  return r;
}

}  // namespace tgk::test
