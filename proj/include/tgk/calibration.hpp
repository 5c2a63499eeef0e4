#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tgk/geometry.hpp"
#include "tgk/magnetics.hpp"

namespace tgk {

inline constexpr std::size_t kFeatureCount = 9;

struct CalibrationSample {
  FluxSample flux;  // baseline-subtracted
  ForceVector force;
};

// Bias-free quadratic map from flux to force. Rows are (fx, fy, fz).
struct CalibrationModel {
  std::size_t taxel_index = 0;
  std::array<std::array<double, kFeatureCount>, 3> coeffs{};
};

// [bx, by, bz, bx^2, by^2, bz^2, bx*by, bx*bz, by*bz]
std::array<double, kFeatureCount> quadratic_features(const FluxSample& b);

// Ordinary least squares per output axis. Throws DegenerateFitError when the
// feature matrix is rank deficient, with the null-space directions in the message.
CalibrationModel fit_taxel(std::span<const CalibrationSample> samples, std::size_t taxel_index = 0);

ForceVector predict_force(const CalibrationModel& model, const FluxSample& b);

struct AxisRms {
  double fx = 0.0;
  double fy = 0.0;
  double fz = 0.0;
};

AxisRms rms_error(const CalibrationModel& model, std::span<const CalibrationSample> samples);

// Hardware baseline per axis (mean and standard deviation of per-taxel RMS, N).
inline constexpr AxisRms kReferenceRmsMean{0.1411, 0.1336, 0.1896};
inline constexpr AxisRms kReferenceRmsStd{0.0290, 0.0262, 0.0534};

// Synthetic calibration of the whole array against the dipole forward model.
enum class GroundTruth {
  // Forces sampled over the sensor range; flux from the dipole model.
  Dipole,
  // Forces relabelled through a known per-taxel quadratic map of the flux, so
  // a noise-free fit must recover that map exactly.
  Quadratic,
};

struct CalibrationCampaign {
  std::size_t samples_per_taxel = 400;
  double force_noise_std = 0.0;
  GroundTruth truth = GroundTruth::Dipole;
  // Relative spread of moment and stiffness between taxels.
  double taxel_variation = 0.05;
  std::uint64_t seed = 1;
};

struct TaxelCalibration {
  std::size_t taxel_index = 0;
  std::optional<CalibrationModel> model;
  std::optional<CalibrationModel> truth;  // set for GroundTruth::Quadratic
  AxisRms rms;
  std::string error;  // non-empty when the fit failed
};

struct CalibrationReport {
  std::vector<TaxelCalibration> taxels;
  AxisRms mean;
  AxisRms stddev;
  std::size_t failed = 0;
};

// Samples one taxel's calibration sweep. Flux is baseline-subtracted.
std::vector<CalibrationSample> synthesize_calibration_samples(std::size_t taxel,
                                                              const TaxelGeometry& geom,
                                                              const DipoleParams& dip,
                                                              const StiffnessModel& k,
                                                              const CalibrationCampaign& cfg);

// Fits all 49 taxels. A degenerate taxel is recorded in the report, others proceed.
CalibrationReport run_calibration(const TaxelGeometry& geom, const DipoleParams& dip,
                                  const StiffnessModel& k, const CalibrationCampaign& cfg);

}  // namespace tgk
