#pragma once

#include <array>
#include <vector>

#include "tgk/geometry.hpp"

namespace tgk {

// Taxel cross-section dimensions in mm.
struct TaxelGeometry {
  double wall_thickness_mm = 2.5;
  double width_mm = 12.0;
  double cavity_height_mm = 1.5875;  // 1/16 in
  double magnet_height_mm = 6.0;
  // Distance from the top of the cavity to the Hall chip's sensing plane.
  double chip_offset_mm = 1.5;

  // Vertical distance from magnet centre to the sensor at rest.
  double standoff_mm() const { return cavity_height_mm + magnet_height_mm / 2.0 + chip_offset_mm; }
  void validate() const;
};

struct DipoleParams {
  double moment_Am2 = 0.011;
  std::array<double, 3> direction{0.0, 0.0, 1.0};

  void validate() const;
};

// Magnetic flux density in millitesla.
struct FluxSample {
  double bx = 0.0;
  double by = 0.0;
  double bz = 0.0;

  friend bool operator==(const FluxSample&, const FluxSample&) = default;
  FluxSample operator-(const FluxSample& o) const { return {bx - o.bx, by - o.by, bz - o.bz}; }
};

// Diagonal compliance of the elastomer structure, N/mm.
struct StiffnessModel {
  double kx = 2.0;
  double ky = 2.0;
  double kz = 12.0;

  void validate() const;
};

struct Displacement {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
};

inline constexpr double kMu0Over4Pi = 1e-7;  // T*m/A

// Point-dipole field at the Hall sensor for a magnet displaced by `d` from rest.
// Throws SingularityError when the magnet centre reaches the sensor.
FluxSample dipole_flux(const Displacement& d, const TaxelGeometry& geom, const DipoleParams& dip);

Displacement force_to_displacement(const ForceVector& f, const StiffnessModel& k);

FluxSample simulate_taxel(const ForceVector& f, const TaxelGeometry& geom, const DipoleParams& dip,
                          const StiffnessModel& k);

struct SweepPoint {
  double shear_mm;
  double bx_mT;
  double bz_mT;
};

struct SweepCurve {
  double height_mm;
  double standoff_mm;
  std::vector<SweepPoint> points;
};

// Pure x-shear sweep over [0, max_shear_mm] for each magnet height.
// `geom.magnet_height_mm` is overridden per curve.
std::vector<SweepCurve> flux_sweep(const std::vector<double>& heights_mm, double max_shear_mm,
                                   std::size_t steps, const TaxelGeometry& geom,
                                   const DipoleParams& dip);

}  // namespace tgk
