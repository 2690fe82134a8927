#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "usfirst/geometry.hpp"
#include "usfirst/measurements.hpp"

namespace usfirst {

using Date = std::chrono::year_month_day;

std::optional<Date> parse_iso_date(std::string_view text);
std::string format_iso_date(const Date& date);

using Annotation = std::variant<UsAnnotation, XrAnnotation>;

struct StudyRecord {
  std::string record_id;
  std::string subject_id;
  Date study_date{};
  Side side = Side::Right;
  Modality modality = Modality::US;
  std::optional<Annotation> annotation;
  std::optional<Measurements> labels;
  std::optional<Measurements> predictions;

  friend bool operator==(const StudyRecord&, const StudyRecord&) = default;
};

// Explicit labels when present, otherwise the measurements derived from the
// annotation; nullopt when the record carries neither.
std::optional<Measurements> effective_labels(const StudyRecord& record);

// Ossific-nucleus flag o for a US record: annotation point, then labels,
// then predictions; false when none say otherwise.
bool ossific_flag(const StudyRecord& record);

// Empty when the record satisfies every type invariant.
std::string check_record(const StudyRecord& record);

struct Rejection {
  std::size_t row = 0;  // 0-based index in the input file
  std::string record_id;
  std::string message;
};

struct LoadResult {
  std::vector<StudyRecord> records;
  std::vector<Rejection> rejections;
};

enum class RecordFormat { Json, Csv };

// Throws ParseError for a malformed file; invalid rows go to `rejections`.
LoadResult load_records(const std::filesystem::path& path, RecordFormat format);
LoadResult load_records(const std::filesystem::path& path);  // format from extension
LoadResult parse_records_json(std::string_view text);
LoadResult parse_records_csv(std::string_view text);

std::string records_to_json(const std::vector<StudyRecord>& records);
std::string records_to_csv(const std::vector<StudyRecord>& records);

enum class Split { PostTrain, Calibration, Evaluation };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

struct SplitAssignment {
  Split split = Split::PostTrain;
  std::string subject_id;

  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

// splits.csv: header "subject_id,split", one row per subject.
std::vector<SplitAssignment> parse_splits_csv(std::string_view text);
std::vector<SplitAssignment> load_splits(const std::filesystem::path& path);
std::string splits_to_csv(const std::vector<SplitAssignment>& splits);

struct PartitionedDataset {
  std::vector<StudyRecord> post_train;
  std::vector<StudyRecord> calibration;
  std::vector<StudyRecord> evaluation;

  const std::vector<StudyRecord>& get(Split split) const;
};

// Subject-level partition; MissingAssignment / DuplicateAssignment on bad
// assignment tables. Input record order is preserved within each split.
PartitionedDataset assign_splits(const std::vector<StudyRecord>& records,
                                 const std::vector<SplitAssignment>& assignment);

enum class Abnormality { Normal = 0, Abnormal = 1, Unknown = 2 };

std::string_view to_string(Abnormality z);

struct AbnormalityRule {
  double ai_threshold = 30.0;  // abnormal when AI >= threshold
  double ce_threshold = 20.0;  // abnormal when CE <= threshold
  IhdiGrade ihdi_min_abnormal = IhdiGrade::II;

  friend bool operator==(const AbnormalityRule&, const AbnormalityRule&) = default;
};

// Throws InvalidArgument on non-finite thresholds or ihdi_min_abnormal == I.
void validate(const AbnormalityRule& rule);

struct StrictPair {
  std::string pair_id;
  StudyRecord us_record;
  StudyRecord xr_record;
  Abnormality z = Abnormality::Unknown;
};

Abnormality label_abnormality(const StrictPair& pair, const AbnormalityRule& rule);

struct Leftover {
  std::string record_id;
  std::string reason;
};

struct PairingResult {
  std::vector<StrictPair> pairs;  // sorted by (subject, date, side)
  std::vector<std::string> warnings;
  std::vector<Leftover> leftovers;
};

/// One pair per (subject, date, side) key that has both a US and an XR
/// record. Duplicate keys keep the lexicographically smallest record id per
/// modality and emit a warning. Each pair's z is labelled with `rule`.
PairingResult build_strict_pairs(const std::vector<StudyRecord>& eval_records,
                                 const AbnormalityRule& rule = {});

// Pair identifier "<subject>_<YYYY-MM-DD>_<L|R>".
std::string make_pair_id(const std::string& subject_id, const Date& date, Side side);

// JSON report of load rejections and pairing leftovers/warnings.
std::string report_to_json(const std::vector<Rejection>& rejections,
                           const PairingResult* pairing);

}  // namespace usfirst
