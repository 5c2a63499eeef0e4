#include "tgk/calibration.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sstream>

#include "tgk/errors.hpp"
#include "tgk/random.hpp"

namespace tgk {
namespace {

constexpr const char* kFeatureNames[kFeatureCount] = {"bx",    "by",    "bz",    "bx^2", "by^2",
                                                      "bz^2", "bx*by", "bx*bz", "by*bz"};

// Above this Gram condition number the normal equations lose too many digits.
constexpr double kMaxGramCondition = 1e12;
constexpr double kRankTolerance = 1e-10;

std::string describe_null_space(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd, double threshold) {
  std::ostringstream out;
  const auto& sv = svd.singularValues();
  const auto& v = svd.matrixV();
  bool first = true;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > threshold) continue;
    out << (first ? "" : "; ") << "[";
    first = false;
    bool first_term = true;
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
      if (std::abs(v(j, k)) < 1e-6) continue;
      out << (first_term ? "" : " ") << (v(j, k) >= 0 ? "+" : "") << v(j, k) << "*"
          << kFeatureNames[j];
      first_term = false;
    }
    out << "]";
  }
  return out.str();
}

}  // namespace

std::array<double, kFeatureCount> quadratic_features(const FluxSample& b) {
  return {b.bx, b.by, b.bz, b.bx * b.bx, b.by * b.by, b.bz * b.bz, b.bx * b.by, b.bx * b.bz,
          b.by * b.bz};
}

CalibrationModel fit_taxel(std::span<const CalibrationSample> samples, std::size_t taxel_index) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (samples.size() < kFeatureCount) {
    throw DegenerateFitError("fit_taxel: need at least 9 samples, got " +
                             std::to_string(samples.size()));
  }
  Eigen::MatrixXd phi(n, kFeatureCount);
  Eigen::MatrixXd targets(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    const auto f = quadratic_features(s.flux);
    for (std::size_t j = 0; j < kFeatureCount; ++j) phi(i, static_cast<Eigen::Index>(j)) = f[j];
    targets(i, 0) = s.force.fx;
    targets(i, 1) = s.force.fy;
    targets(i, 2) = s.force.fz;
  }
  if (!phi.allFinite() || !targets.allFinite()) {
    throw ArgumentError("fit_taxel: non-finite sample");
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double threshold = kRankTolerance * std::max(smax, 1e-300);
  if (!(smax > 0) || sv(sv.size() - 1) <= threshold) {
    throw DegenerateFitError("fit_taxel: rank-deficient feature matrix for taxel " +
                             std::to_string(taxel_index) +
                             "; deficient directions: " + describe_null_space(svd, threshold));
  }

  const double cond = smax / sv(sv.size() - 1);
  Eigen::MatrixXd solution;
  if (cond * cond <= kMaxGramCondition) {
    const Eigen::MatrixXd gram = phi.transpose() * phi;
    solution = gram.llt().solve(phi.transpose() * targets);
  } else {
    solution = phi.colPivHouseholderQr().solve(targets);
  }

  CalibrationModel model;
  model.taxel_index = taxel_index;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      model.coeffs[axis][j] =
          solution(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(axis));
    }
  }
  return model;
}

ForceVector predict_force(const CalibrationModel& model, const FluxSample& b) {
  const auto f = quadratic_features(b);
  std::array<double, 3> out{};
  for (std::size_t axis = 0; axis < 3; ++axis) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) acc += model.coeffs[axis][j] * f[j];
    out[axis] = acc;
  }
  return {out[0], out[1], out[2]};
}

AxisRms rms_error(const CalibrationModel& model, std::span<const CalibrationSample> samples) {
  if (samples.empty()) throw ArgumentError("rms_error: empty sample set");
  double sx = 0, sy = 0, sz = 0;
  for (const auto& s : samples) {
    const ForceVector p = predict_force(model, s.flux);
    sx += (p.fx - s.force.fx) * (p.fx - s.force.fx);
    sy += (p.fy - s.force.fy) * (p.fy - s.force.fy);
    sz += (p.fz - s.force.fz) * (p.fz - s.force.fz);
  }
  const double n = static_cast<double>(samples.size());
  return {std::sqrt(sx / n), std::sqrt(sy / n), std::sqrt(sz / n)};
}

}  // namespace tgk

namespace tgk {
namespace {

struct TaxelVariant {
  DipoleParams dip;
  StiffnessModel k;
};

TaxelVariant vary_taxel(std::size_t taxel, const DipoleParams& dip, const StiffnessModel& k,
                        const CalibrationCampaign& cfg) {
  std::mt19937_64 rng(derive_seed(cfg.seed, {0xca1, taxel}));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TaxelVariant v{dip, k};
  v.dip.moment_Am2 *= 1.0 + cfg.taxel_variation * u(rng);
  v.k.kx *= 1.0 + cfg.taxel_variation * u(rng);
  v.k.ky *= 1.0 + cfg.taxel_variation * u(rng);
  v.k.kz *= 1.0 + cfg.taxel_variation * u(rng);
  return v;
}

}  // namespace

std::vector<CalibrationSample> synthesize_calibration_samples(std::size_t taxel,
                                                              const TaxelGeometry& geom,
                                                              const DipoleParams& dip,
                                                              const StiffnessModel& k,
                                                              const CalibrationCampaign& cfg) {
  const TaxelVariant v = vary_taxel(taxel, dip, k, cfg);
  const FluxSample baseline = simulate_taxel({}, geom, v.dip, v.k);
  std::mt19937_64 rng(derive_seed(cfg.seed, {0xca2, taxel}));
  std::uniform_real_distribution<double> shear(-kMaxShearN, kMaxShearN);
  std::uniform_real_distribution<double> normal(-kMaxNormalN, 0.0);
  std::vector<CalibrationSample> samples;
  samples.reserve(cfg.samples_per_taxel);
  for (std::size_t i = 0; i < cfg.samples_per_taxel; ++i) {
    ForceVector f;
    f.fx = shear(rng);
    f.fy = shear(rng);
    f.fz = normal(rng);
    samples.push_back({simulate_taxel(f, geom, v.dip, v.k) - baseline, f});
  }
  return samples;
}

CalibrationReport run_calibration(const TaxelGeometry& geom, const DipoleParams& dip,
                                  const StiffnessModel& k, const CalibrationCampaign& cfg) {
  geom.validate();
  dip.validate();
  k.validate();
  CalibrationReport report;
  for (std::size_t t = 0; t < kTaxelCount; ++t) {
    TaxelCalibration tc;
    tc.taxel_index = t;
    try {
      auto samples = synthesize_calibration_samples(t, geom, dip, k, cfg);
      if (cfg.truth == GroundTruth::Quadratic) {
        const CalibrationModel truth = fit_taxel(samples, t);
        for (auto& s : samples) s.force = predict_force(truth, s.flux);
        tc.truth = truth;
      }
      if (cfg.force_noise_std > 0) {
        std::mt19937_64 rng(derive_seed(cfg.seed, {0xca3, t}));
        std::normal_distribution<double> noise(0.0, cfg.force_noise_std);
        for (auto& s : samples) {
          s.force.fx += noise(rng);
          s.force.fy += noise(rng);
          s.force.fz += noise(rng);
        }
      }
      tc.model = fit_taxel(samples, t);
      tc.rms = rms_error(*tc.model, samples);
    } catch (const DegenerateFitError& e) {
      tc.error = e.what();
      ++report.failed;
    }
    report.taxels.push_back(std::move(tc));
  }

  std::vector<AxisRms> ok;
  for (const auto& tc : report.taxels) {
    if (tc.model) ok.push_back(tc.rms);
  }
  if (!ok.empty()) {
    const double n = static_cast<double>(ok.size());
    for (const auto& r : ok) {
      report.mean.fx += r.fx / n;
      report.mean.fy += r.fy / n;
      report.mean.fz += r.fz / n;
    }
    for (const auto& r : ok) {
      report.stddev.fx += (r.fx - report.mean.fx) * (r.fx - report.mean.fx) / n;
      report.stddev.fy += (r.fy - report.mean.fy) * (r.fy - report.mean.fy) / n;
      report.stddev.fz += (r.fz - report.mean.fz) * (r.fz - report.mean.fz) / n;
    }
    report.stddev = {std::sqrt(report.stddev.fx), std::sqrt(report.stddev.fy),
                     std::sqrt(report.stddev.fz)};
  }
  return report;
}

}  // namespace tgk
