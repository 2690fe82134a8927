#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Core>

#include "usfirst/errors.hpp"
#include "usfirst/measurements.hpp"

namespace usfirst {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

using Point2d = Point2<double>;

/// Line segment in image pixel coordinates (y grows downward).
template <typename Scalar>
struct Line2 {
  Point2<Scalar> p0 = Point2<Scalar>::Zero();
  Point2<Scalar> p1 = Point2<Scalar>::Zero();

  Point2<Scalar> direction() const { return p1 - p0; }
  Scalar length() const { return direction().norm(); }

  friend bool operator==(const Line2& a, const Line2& b) {
    return a.p0 == b.p0 && a.p1 == b.p1;
  }
};

using Line2D = Line2<double>;

// Lines shorter than this (pixels) are degenerate.
inline constexpr double kMinLineLength = 1e-6;
// Reference lines closer than this to parallel (degrees) cannot define a
// quadrant origin.
inline constexpr double kMinReferenceAngleDeg = 0.1;

template <typename Scalar>
bool is_degenerate(const Line2<Scalar>& line) {
  return !(line.length() >= Scalar(kMinLineLength));
}

template <typename Scalar>
Scalar rad_to_deg(Scalar rad) {
  return rad * Scalar(180) / Scalar(EIGEN_PI);
}

template <typename Scalar>
Scalar deg_to_rad(Scalar deg) {
  return deg * Scalar(EIGEN_PI) / Scalar(180);
}

/// Acute angle in degrees, in [0, 90], between the directions of two lines.
///
/// Equal to arccos(|u.v| / (|u||v|)); evaluated as atan2(|u x v|, |u.v|).
template <typename Scalar>
Scalar acute_angle_between(const Line2<Scalar>& l1, const Line2<Scalar>& l2) {
  if (is_degenerate(l1) || is_degenerate(l2)) {
    throw DegenerateLine("acute_angle_between: zero-length line");
  }
  const Point2<Scalar> u = l1.direction();
  const Point2<Scalar> v = l2.direction();
  const Scalar cross = u.x() * v.y() - u.y() * v.x();
  const Scalar dot = u.dot(v);
  using std::abs;
  using std::atan2;
  return rad_to_deg(atan2(abs(cross), abs(dot)));
}

struct UsAnnotation {
  Line2D baseline;
  Line2D alpha_line;
  Line2D beta_line;
  double exposed_len = 0.0;  // pixels
  double total_len = 0.0;    // pixels
  std::optional<Point2d> ossific_point;
  Side side = Side::Right;

  friend bool operator==(const UsAnnotation&, const UsAnnotation&) = default;
};

struct XrAnnotation {
  Line2D h_line;      // Hilgenreiner
  Line2D p_line;      // Perkin
  Line2D diag45_line;
  Point2d h_point = Point2d::Zero();
  Line2D ai_line;
  Line2D ce_ray;
  Side side = Side::Right;

  friend bool operator==(const XrAnnotation&, const XrAnnotation&) = default;
};

// Graf alpha/beta against the shared baseline, coverage = 100 * exposed/total.
Measurements derive_us(const UsAnnotation& ann);

// AI, CE against the image vertical, and the IHDI grade.
Measurements derive_xr(const XrAnnotation& ann);

/// IHDI grade from the position of the H-point relative to the P-line,
/// 45-degree line and H-line.
///
/// Canonical frame: lateral points toward image-left for a right hip (AP
/// radiographs are displayed with the patient's right on the image left);
/// left hips are mirrored about the vertical through the H/P intersection
/// first. Tests use signed perpendicular distances and points on a boundary
/// take the less severe grade:
///   I   at or medial to the P-line
///   IV  strictly superior to the H-line
///   II  at or medial to the 45-degree line
///   III otherwise
IhdiGrade ihdi_grade(const Point2d& h_point, const Line2D& p_line,
                     const Line2D& diag45, const Line2D& h_line, Side side);

// Intersection of two infinite lines; ParallelReferenceLines if they are
// within kMinReferenceAngleDeg of parallel.
Point2d reference_origin(const Line2D& h_line, const Line2D& p_line);

// Empty string when valid, else the violated invariant.
std::string check_annotation(const UsAnnotation& ann);
std::string check_annotation(const XrAnnotation& ann);

}  // namespace usfirst
