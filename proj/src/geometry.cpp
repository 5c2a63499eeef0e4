#include "tgk/geometry.hpp"

#include <string>

#include "tgk/errors.hpp"

namespace tgk {
namespace {

constexpr std::array<std::array<int, kGridCols>, kGridRows> build_index_map() {
  std::array<std::array<int, kGridCols>, kGridRows> map{};
  int next = 0;
  for (std::size_t r = 0; r < kGridRows; ++r) {
    for (std::size_t c = 0; c < kGridCols; ++c) {
      const bool valid = c < 9 || r < 4;
      map[r][c] = valid ? next++ : -1;
    }
  }
  return map;
}

constexpr auto kIndexMap = build_index_map();

constexpr std::array<TaxelGrid::Cell, kTaxelCount> build_cells() {
  std::array<TaxelGrid::Cell, kTaxelCount> cells{};
  for (std::size_t r = 0; r < kGridRows; ++r) {
    for (std::size_t c = 0; c < kGridCols; ++c) {
      if (kIndexMap[r][c] >= 0) cells[static_cast<std::size_t>(kIndexMap[r][c])] = {r, c};
    }
  }
  return cells;
}

constexpr auto kCells = build_cells();

static_assert(kIndexMap[kGridRows - 1][kGridCols - 1] == -1);
static_assert(kIndexMap[kGridRows - 1][kGridCols - 2] == static_cast<int>(kTaxelCount) - 1);

}  // namespace

bool TaxelGrid::is_valid(std::size_t row, std::size_t col) {
  return row < kGridRows && col < kGridCols && kIndexMap[row][col] >= 0;
}

std::optional<std::size_t> TaxelGrid::taxel_index(std::size_t row, std::size_t col) {
  if (row >= kGridRows || col >= kGridCols) {
    throw BoundsError("taxel_index: cell (" + std::to_string(row) + ", " + std::to_string(col) +
                      ") is outside the 5x10 grid");
  }
  const int idx = kIndexMap[row][col];
  if (idx < 0) return std::nullopt;
  return static_cast<std::size_t>(idx);
}

TaxelGrid::Cell TaxelGrid::cell_of(std::size_t taxel) {
  if (taxel >= kTaxelCount) {
    throw BoundsError("cell_of: taxel " + std::to_string(taxel) + " out of range");
  }
  return kCells[taxel];
}

ForceImage to_grid(const TactileFrame& frame) {
  ForceImage image{};
  for (std::size_t t = 0; t < kTaxelCount; ++t) {
    const auto [r, c] = kCells[t];
    const std::size_t cell = r * kGridCols + c;
    image[0 * kGridCells + cell] = frame.forces[t].fx;
    image[1 * kGridCells + cell] = frame.forces[t].fy;
    image[2 * kGridCells + cell] = frame.forces[t].fz;
  }
  return image;
}

TactileFrame from_grid(const ForceImage& image) {
  TactileFrame frame;
  for (std::size_t t = 0; t < kTaxelCount; ++t) {
    const auto [r, c] = kCells[t];
    const std::size_t cell = r * kGridCols + c;
    frame.forces[t] = {image[cell], image[kGridCells + cell], image[2 * kGridCells + cell]};
  }
  return frame;
}

}  // namespace tgk
