#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace usfirst {

enum class Side { Left, Right };
enum class Modality { US, XR };

// Ordinal dislocation grade. Numeric values follow the clinical ordering so
// grades compare with the usual operators.
enum class IhdiGrade { I = 1, II = 2, III = 3, IV = 4 };

// The two ultrasound targets that carry conformal lower bounds.
enum class Target { Alpha, Coverage };

std::string_view to_string(Side side);
std::string_view to_string(Modality modality);
std::string_view to_string(IhdiGrade grade);
std::string_view to_string(Target target);

// "L"/"R" (also accepts "Left"/"Right").
std::optional<Side> parse_side(std::string_view text);
std::optional<Modality> parse_modality(std::string_view text);
// Roman numerals I..IV or digits 1..4.
std::optional<IhdiGrade> parse_ihdi(std::string_view text);
std::optional<Target> parse_target(std::string_view text);

/// Named measurements for one image, either derived from trainee annotations
/// (labels) or produced by a measurement predictor.
struct Measurements {
  std::optional<double> alpha;     // degrees
  std::optional<double> beta;      // degrees
  std::optional<double> coverage;  // percent
  std::optional<double> ai;        // degrees
  std::optional<double> ce;        // degrees
  std::optional<IhdiGrade> ihdi;
  bool ossific_flag = false;

  std::optional<double> get(Target target) const {
    return target == Target::Alpha ? alpha : coverage;
  }

  bool has_any() const {
    return alpha || beta || coverage || ai || ce || ihdi;
  }

  bool has_xr_ground_truth() const { return ai || ce || ihdi; }

  friend bool operator==(const Measurements&, const Measurements&) = default;
};

// Returns an empty string when the measurements satisfy the range invariants
// (angles in [0, 180), coverage in [0, 100], at least one field present);
// otherwise a message naming the violated invariant.
std::string check_measurements(const Measurements& m);

}  // namespace usfirst
