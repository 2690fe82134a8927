#include "usfirst/measurements.hpp"

#include <cmath>

#include <fmt/format.h>

namespace usfirst {

std::string_view to_string(Side side) { return side == Side::Left ? "L" : "R"; }

std::string_view to_string(Modality modality) {
  return modality == Modality::US ? "US" : "XR";
}

std::string_view to_string(IhdiGrade grade) {
  switch (grade) {
    case IhdiGrade::I: return "I";
    case IhdiGrade::II: return "II";
    case IhdiGrade::III: return "III";
    case IhdiGrade::IV: return "IV";
  }
  return "?";
}

std::string_view to_string(Target target) {
  return target == Target::Alpha ? "alpha" : "coverage";
}

std::optional<Side> parse_side(std::string_view text) {
  if (text == "L" || text == "Left") return Side::Left;
  if (text == "R" || text == "Right") return Side::Right;
  return std::nullopt;
}

std::optional<Modality> parse_modality(std::string_view text) {
  if (text == "US") return Modality::US;
  if (text == "XR") return Modality::XR;
  return std::nullopt;
}

std::optional<IhdiGrade> parse_ihdi(std::string_view text) {
  if (text == "I" || text == "1") return IhdiGrade::I;
  if (text == "II" || text == "2") return IhdiGrade::II;
  if (text == "III" || text == "3") return IhdiGrade::III;
  if (text == "IV" || text == "4") return IhdiGrade::IV;
  return std::nullopt;
}

std::optional<Target> parse_target(std::string_view text) {
  if (text == "alpha") return Target::Alpha;
  if (text == "coverage" || text == "cov") return Target::Coverage;
  return std::nullopt;
}

namespace {

std::string check_angle(const char* name, const std::optional<double>& v) {
  if (v && !(std::isfinite(*v) && *v >= 0.0 && *v < 180.0)) {
    return fmt::format("{} must lie in [0, 180) degrees (got {})", name, *v);
  }
  return {};
}

}  // namespace

std::string check_measurements(const Measurements& m) {
  if (!m.has_any()) return "measurements: at least one field must be present";
  for (auto [name, value] : {std::pair{"alpha", m.alpha}, std::pair{"beta", m.beta},
                             std::pair{"ai", m.ai}, std::pair{"ce", m.ce}}) {
    if (auto msg = check_angle(name, value); !msg.empty()) return msg;
  }
  if (m.coverage && !(std::isfinite(*m.coverage) && *m.coverage >= 0.0 &&
                      *m.coverage <= 100.0)) {
    return fmt::format("coverage must lie in [0, 100] percent (got {})", *m.coverage);
  }
  return {};
}

}  // namespace usfirst
