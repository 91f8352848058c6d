#include "maploc/degeneracy.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "maploc/error.hpp"

namespace maploc {

Spectrum spectrum(const Matrix6d& hessian) {
  const double scale = std::max(1.0, hessian.cwiseAbs().maxCoeff());
  if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
    throw Error(ErrorCode::kNotSymmetric, "spectrum of a non-symmetric matrix");
  }
  const Matrix6d sym = 0.5 * (hessian + hessian.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix6d> eig(sym);

  Spectrum s;
  s.eigenvalues = eig.eigenvalues();
  s.eigenvectors = eig.eigenvectors();
  for (int i = 0; i < 6; ++i) {
    auto col = s.eigenvectors.col(i);
    Eigen::Index lead = 0;
    col.cwiseAbs().maxCoeff(&lead);
    if (col[lead] < 0.0) col = -col;
  }
  return s;
}

double spectrum_metric(const Spectrum& measurement, const Spectrum& reference) {
  double d_e = 0.0;
  for (int i = 0; i < 6; ++i) {
    const double lambda = measurement.eigenvalues[i];
    if (!(lambda > 0.0)) return kInfiniteMetric;
    const auto e = measurement.eigenvectors.col(i);
    const auto v = reference.eigenvectors.col(i);
    // Identical directions score exactly zero, free of rounding in the normalization.
    const double cosine = e == v ? 1.0 : std::abs(e.dot(v)) / (e.norm() * v.norm());
    const double miss = 1.0 - cosine;
    d_e += miss * miss / lambda;
  }
  return d_e;
}

std::array<std::size_t, 3> classify_constraints(std::span<const Correspondence> corrs) {
  std::array<std::size_t, 3> counts{};
  for (const auto& c : corrs) {
    const Eigen::Vector3d a = c.normal.cwiseAbs();
    int axis = kAxisX;
    if (a.y() > a[axis]) axis = kAxisY;
    if (a.z() > a[axis]) axis = kAxisZ;
    ++counts[static_cast<std::size_t>(axis)];
  }
  return counts;
}

Matrix6d reference_hessian(std::span<const Correspondence> corrs) {
  Matrix6d h = Matrix6d::Zero();
  Eigen::Matrix<double, 1, 6> row;
  for (const auto& c : corrs) {
    row << c.target.cross(c.normal).transpose(), c.normal.transpose();
    h.noalias() += row.transpose() * row;
  }
  return 0.5 * (h + h.transpose());
}

DegeneracyReport detect(const AlignResult& align, const Spectrum& reference,
                        const DegeneracyParams& params) {
  DegeneracyReport report;
  report.threshold = params.de_threshold;
  const auto& corrs = align.correspondences;
  report.axis_counts = classify_constraints(corrs);

  if (corrs.size() < params.min_correspondences) {
    report.d_e = kInfiniteMetric;
    report.stage1_reject = true;
    return report;
  }

  report.d_e = spectrum_metric(spectrum(align.hessian), reference);
  if (!(report.d_e <= params.de_threshold)) {
    report.stage1_reject = true;
  }

  const auto& n = report.axis_counts;
  const std::size_t n_min = *std::min_element(n.begin(), n.end());
  double max_ratio = 1.0;
  for (std::size_t a = 0; a < 3; ++a) {
    if (n_min == 0) {
      report.ratios[a] = n[a] == 0 ? 1.0 : std::numeric_limits<double>::infinity();
    } else {
      report.ratios[a] = static_cast<double>(n[a]) / static_cast<double>(n_min);
    }
    max_ratio = std::max(max_ratio, report.ratios[a]);
  }
  if (max_ratio >= params.s_thres) {
    for (std::size_t a = 0; a < 3; ++a) report.degenerate[a] = n[a] == n_min;
  }
  return report;
}

DegeneracyReport DegeneracyDetector::process(const AlignResult& align) {
  const Spectrum reference = spectrum(reference_hessian(align.correspondences));
  const bool calibrate = !(params_.de_threshold > 0.0);
  DegeneracyParams p = params_;
  if (calibrate) p.de_threshold = kInfiniteMetric;
  DegeneracyReport report = detect(align, reference, p);
  if (calibrate) {
    if (report.stage1_reject) {
      // Not accepted; the threshold stays uncalibrated for the next frame.
      report.threshold = 0.0;
      return report;
    }
    params_.de_threshold = std::max(params_.calibration_factor * report.d_e, params_.min_threshold);
    report.threshold = params_.de_threshold;
  }
  return report;
}

}  // namespace maploc
