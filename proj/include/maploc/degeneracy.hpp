#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>

#include "maploc/geometry.hpp"
#include "maploc/registration.hpp"

namespace maploc {

/// Eigen-decomposition of a 6x6 information matrix. Eigenvalues ascend; eigenvectors are the
/// columns, each signed so its largest-magnitude component is positive.
struct Spectrum {
  Vector6d eigenvalues = Vector6d::Zero();
  Matrix6d eigenvectors = Matrix6d::Identity();
};

enum Axis : int { kAxisX = 0, kAxisY = 1, kAxisZ = 2 };

struct DegeneracyParams {
  /// Stage-1 bound on the spectrum metric. Non-positive means "calibrate from the first
  /// accepted frame" (see DegeneracyDetector).
  double de_threshold = 0.0;
  double calibration_factor = 10.0;
  /// Floor on a calibrated threshold. A noiseless first frame can give d_e near 1e-17, and ten
  /// times that would reject later frames on rounding alone.
  double min_threshold = 1e-6;
  double s_thres = 3.0;
  std::size_t min_correspondences = 100;
};

struct DegeneracyReport {
  double d_e = 0.0;
  std::array<std::size_t, 3> axis_counts{};
  /// N_i / N_min. Axes with N_min == 0: zero-count axes get 1, the rest +infinity.
  std::array<double, 3> ratios{1.0, 1.0, 1.0};
  std::array<bool, 3> degenerate{};
  bool stage1_reject = false;
  double threshold = 0.0;  // the stage-1 threshold that was applied

  bool any_degenerate() const { return degenerate[0] || degenerate[1] || degenerate[2]; }
  int mask_bits() const {
    return (degenerate[0] ? 1 : 0) | (degenerate[1] ? 2 : 0) | (degenerate[2] ? 4 : 0);
  }
};

inline constexpr double kInfiniteMetric = std::numeric_limits<double>::infinity();

/// Throws Error(kNotSymmetric) if H deviates from symmetry by more than 1e-9 (relative to its
/// largest entry when that exceeds one).
Spectrum spectrum(const Matrix6d& hessian);

/// sum_i (1/lambda_i) (1 - |e_i . v_i| / (|e_i| |v_i|))^2 with lambda_i, e_i from the
/// measurement and v_i from the reference. +infinity if any measurement eigenvalue is <= 0.
double spectrum_metric(const Spectrum& measurement, const Spectrum& reference);

/// Assigns each correspondence to the translation axis with the largest |normal component|
/// (ties resolve x, then y, then z).
std::array<std::size_t, 3> classify_constraints(std::span<const Correspondence> corrs);

/// Unit-weight Hessian of the matched map points registered onto themselves: the geometry the
/// map expects to see from this pose.
Matrix6d reference_hessian(std::span<const Correspondence> corrs);

/// Two-stage test: spectrum metric against threshold, then the per-axis constraint ratios.
/// The axis (or axes) with the fewest constraints is degenerate when the largest ratio reaches
/// s_thres.
DegeneracyReport detect(const AlignResult& align, const Spectrum& reference,
                        const DegeneracyParams& params);

/// Stateful wrapper used per sequence: builds the reference spectrum and calibrates the
/// stage-1 threshold from the first accepted frame when none is configured.
class DegeneracyDetector {
 public:
  explicit DegeneracyDetector(DegeneracyParams params) : params_(params) {}

  DegeneracyReport process(const AlignResult& align);
  double threshold() const { return params_.de_threshold; }

 private:
  DegeneracyParams params_;
};

}  // namespace maploc
