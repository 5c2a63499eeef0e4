#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

namespace tgk {

// Tri-axial force in newtons. Compression is negative fz.
struct ForceVector {
  double fx = 0.0;
  double fy = 0.0;
  double fz = 0.0;

  friend bool operator==(const ForceVector&, const ForceVector&) = default;
};

inline constexpr std::size_t kTaxelCount = 49;
inline constexpr std::size_t kGridRows = 5;
inline constexpr std::size_t kGridCols = 10;
inline constexpr std::size_t kGridCells = kGridRows * kGridCols;
inline constexpr std::size_t kAxes = 3;
inline constexpr double kPitchCm = 1.5;
inline constexpr double kFrameRateHz = 25.0;

// Sensor range covered by calibration.
inline constexpr double kMaxShearN = 2.0;
inline constexpr double kMaxNormalN = 7.0;

// One sampled frame of the whole array, taxels in index order.
struct TactileFrame {
  std::array<ForceVector, kTaxelCount> forces{};
  int timestamp = 0;

  friend bool operator==(const TactileFrame&, const TactileFrame&) = default;
};

// 5 x 10 grid holding a 5 x 9 block plus a fourth-row-short extra column.
// Cell (4, 9) is the padded phantom. Indices are row-major over valid cells.
class TaxelGrid {
 public:
  static constexpr std::size_t rows() { return kGridRows; }
  static constexpr std::size_t cols() { return kGridCols; }
  static constexpr double pitch_cm() { return kPitchCm; }
  static constexpr double footprint_width_cm() { return 8.0; }
  static constexpr double footprint_length_cm() { return 16.0; }

  static bool is_valid(std::size_t row, std::size_t col);

  // Throws BoundsError when row/col lie outside the 5 x 10 grid.
  static std::optional<std::size_t> taxel_index(std::size_t row, std::size_t col);

  struct Cell {
    std::size_t row;
    std::size_t col;
  };
  static Cell cell_of(std::size_t taxel);

  // Position of a taxel centre in cm; x runs along the 16 cm (column) axis.
  static double x_cm(std::size_t taxel) { return static_cast<double>(cell_of(taxel).col) * kPitchCm; }
  static double y_cm(std::size_t taxel) { return static_cast<double>(cell_of(taxel).row) * kPitchCm; }
};

// 3 x 5 x 10 image, channel-major (x, y, z), phantom cell zero.
using ForceImage = std::array<double, kAxes * kGridCells>;

ForceImage to_grid(const TactileFrame& frame);
TactileFrame from_grid(const ForceImage& image);

}  // namespace tgk
