#include "usfirst/geometry.hpp"

#include <cmath>

#include <fmt/format.h>

namespace usfirst {
namespace {

// Boundary band for the IHDI side tests, in pixels.
constexpr double kBoundaryEps = 1e-9;

Point2d perp(const Point2d& v) { return {-v.y(), v.x()}; }

double cross(const Point2d& u, const Point2d& v) { return u.x() * v.y() - u.y() * v.x(); }

// Unit normal of `line` pointing into the half-plane that contains `toward`.
Point2d oriented_normal(const Line2D& line, const Point2d& toward) {
  Point2d n = perp(line.direction().normalized());
  return n.dot(toward) >= 0.0 ? n : Point2d(-n);
}

void require_line(const Line2D& line, const char* name) {
  if (is_degenerate(line)) throw DegenerateLine(fmt::format("{} has zero length", name));
}

void require_non_parallel(const Line2D& h_line, const Line2D& p_line) {
  if (acute_angle_between(h_line, p_line) < kMinReferenceAngleDeg) {
    throw ParallelReferenceLines("H-line and P-line are parallel");
  }
}

}  // namespace

Point2d reference_origin(const Line2D& h_line, const Line2D& p_line) {
  require_line(h_line, "h_line");
  require_line(p_line, "p_line");
  require_non_parallel(h_line, p_line);
  const Point2d d1 = h_line.direction();
  const Point2d d2 = p_line.direction();
  const double t = cross(p_line.p0 - h_line.p0, d2) / cross(d1, d2);
  return h_line.p0 + t * d1;
}

Measurements derive_us(const UsAnnotation& ann) {
  if (!(ann.total_len > 0.0) || !std::isfinite(ann.total_len)) {
    throw InvalidRatio("total_len must be > 0");
  }
  if (!(ann.exposed_len >= 0.0) || ann.exposed_len > ann.total_len) {
    throw InvalidRatio("exposed_len must lie in [0, total_len]");
  }
  Measurements m;
  m.alpha = acute_angle_between(ann.baseline, ann.alpha_line);
  m.beta = acute_angle_between(ann.baseline, ann.beta_line);
  m.coverage = 100.0 * ann.exposed_len / ann.total_len;
  m.ossific_flag = ann.ossific_point.has_value();
  return m;
}

IhdiGrade ihdi_grade(const Point2d& h_point, const Line2D& p_line, const Line2D& diag45,
                     const Line2D& h_line, Side side) {
  require_line(h_line, "h_line");
  require_line(p_line, "p_line");
  require_line(diag45, "diag45_line");
  require_non_parallel(h_line, p_line);

  // Mirroring a left hip about a vertical axis is the same as flipping the
  // lateral direction; every test below is translation invariant.
  const double lateral_sign = side == Side::Right ? -1.0 : 1.0;
  const Point2d d_h = h_line.direction().normalized();
  Point2d lateral = d_h;
  if (lateral.x() * lateral_sign < 0.0 ||
      (lateral.x() == 0.0 && lateral.y() > 0.0)) {
    lateral = -lateral;
  }
  Point2d superior = perp(d_h);
  if (superior.y() > 0.0) superior = -superior;

  const Point2d n_p = oriented_normal(p_line, lateral);
  const Point2d n_d = oriented_normal(diag45, lateral + superior);

  const double s_p = n_p.dot(h_point - p_line.p0);
  if (s_p <= kBoundaryEps) return IhdiGrade::I;
  const double s_h = superior.dot(h_point - h_line.p0);
  if (s_h > kBoundaryEps) return IhdiGrade::IV;
  const double s_d = n_d.dot(h_point - diag45.p0);
  return s_d <= kBoundaryEps ? IhdiGrade::II : IhdiGrade::III;
}

Measurements derive_xr(const XrAnnotation& ann) {
  Measurements m;
  m.ai = acute_angle_between(ann.h_line, ann.ai_line);
  const Line2D vertical{ann.ce_ray.p0, ann.ce_ray.p0 + Point2d(0.0, 1.0)};
  m.ce = acute_angle_between(vertical, ann.ce_ray);
  m.ihdi = ihdi_grade(ann.h_point, ann.p_line, ann.diag45_line, ann.h_line, ann.side);
  return m;
}

namespace {

std::string check_line(const Line2D& line, const char* name) {
  if (!line.p0.allFinite() || !line.p1.allFinite()) {
    return fmt::format("{}: coordinates must be finite", name);
  }
  if (is_degenerate(line)) return fmt::format("{}: p0 must differ from p1", name);
  return {};
}

}  // namespace

std::string check_annotation(const UsAnnotation& ann) {
  for (auto [line, name] : {std::pair{&ann.baseline, "baseline"},
                            std::pair{&ann.alpha_line, "alpha_line"},
                            std::pair{&ann.beta_line, "beta_line"}}) {
    if (auto msg = check_line(*line, name); !msg.empty()) return msg;
  }
  if (!(std::isfinite(ann.total_len) && ann.total_len > 0.0)) return "total_len must be > 0";
  if (!(std::isfinite(ann.exposed_len) && ann.exposed_len >= 0.0)) {
    return "exposed_len must be >= 0";
  }
  if (ann.exposed_len > ann.total_len) return "exposed_len <= total_len violated";
  if (ann.ossific_point && !ann.ossific_point->allFinite()) {
    return "ossific_point must be finite";
  }
  return {};
}

std::string check_annotation(const XrAnnotation& ann) {
  for (auto [line, name] : {std::pair{&ann.h_line, "h_line"}, std::pair{&ann.p_line, "p_line"},
                            std::pair{&ann.diag45_line, "diag45_line"},
                            std::pair{&ann.ai_line, "ai_line"},
                            std::pair{&ann.ce_ray, "ce_ray"}}) {
    if (auto msg = check_line(*line, name); !msg.empty()) return msg;
  }
  if (!ann.h_point.allFinite()) return "h_point must be finite";
  if (acute_angle_between(ann.h_line, ann.p_line) < kMinReferenceAngleDeg) {
    return "h_line and p_line must be non-parallel";
  }
  return {};
}

}  // namespace usfirst
