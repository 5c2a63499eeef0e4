#include "tgk/magnetics.hpp"

#include <cmath>
#include <string>

#include "tgk/errors.hpp"

namespace tgk {

void TaxelGeometry::validate() const {
  if (!(wall_thickness_mm > 0 && width_mm > 0 && cavity_height_mm > 0 && magnet_height_mm > 0 &&
        chip_offset_mm > 0)) {
    throw ArgumentError("TaxelGeometry: all lengths must be positive");
  }
}

void DipoleParams::validate() const {
  if (!(moment_Am2 > 0)) throw ArgumentError("DipoleParams: moment must be positive");
  const double n = std::hypot(direction[0], direction[1], direction[2]);
  if (std::abs(n - 1.0) > 1e-9) throw ArgumentError("DipoleParams: direction must be unit-norm");
}

void StiffnessModel::validate() const {
  if (!(kx > 0 && ky > 0 && kz > 0)) throw ArgumentError("StiffnessModel: stiffness must be positive");
}

FluxSample dipole_flux(const Displacement& d, const TaxelGeometry& geom, const DipoleParams& dip) {
  // Sensor at the origin, magnet centre at (dx, dy, z0 + dz). r points from magnet to sensor.
  const double rx = -d.dx * 1e-3;
  const double ry = -d.dy * 1e-3;
  const double rz = -(geom.standoff_mm() + d.dz) * 1e-3;
  const double r2 = rx * rx + ry * ry + rz * rz;
  if (!(r2 > 0.0)) {
    throw SingularityError("dipole_flux: magnet centre coincides with the sensor");
  }
  const double r = std::sqrt(r2);
  const double ux = rx / r, uy = ry / r, uz = rz / r;
  const double m = dip.moment_Am2;
  const double mx = m * dip.direction[0], my = m * dip.direction[1], mz = m * dip.direction[2];
  const double m_dot_u = mx * ux + my * uy + mz * uz;
  const double scale = kMu0Over4Pi / (r2 * r) * 1e3;  // tesla -> mT
  return {scale * (3.0 * m_dot_u * ux - mx), scale * (3.0 * m_dot_u * uy - my),
          scale * (3.0 * m_dot_u * uz - mz)};
}

Displacement force_to_displacement(const ForceVector& f, const StiffnessModel& k) {
  return {f.fx / k.kx, f.fy / k.ky, f.fz / k.kz};
}

FluxSample simulate_taxel(const ForceVector& f, const TaxelGeometry& geom, const DipoleParams& dip,
                          const StiffnessModel& k) {
  return dipole_flux(force_to_displacement(f, k), geom, dip);
}

std::vector<SweepCurve> flux_sweep(const std::vector<double>& heights_mm, double max_shear_mm,
                                   std::size_t steps, const TaxelGeometry& geom,
                                   const DipoleParams& dip) {
  if (steps < 2) throw ArgumentError("flux_sweep: steps must be >= 2");
  if (!(max_shear_mm > 0)) throw ArgumentError("flux_sweep: max shear must be positive");
  std::vector<SweepCurve> curves;
  curves.reserve(heights_mm.size());
  for (double h : heights_mm) {
    TaxelGeometry g = geom;
    g.magnet_height_mm = h;
    g.validate();
    SweepCurve curve{h, g.standoff_mm(), {}};
    curve.points.reserve(steps);
    for (std::size_t i = 0; i < steps; ++i) {
      const double s = max_shear_mm * static_cast<double>(i) / static_cast<double>(steps - 1);
      const FluxSample b = dipole_flux({s, 0.0, 0.0}, g, dip);
      curve.points.push_back({s, b.bx, b.bz});
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace tgk
