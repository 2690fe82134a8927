#include <algorithm>

#include <gtest/gtest.h>

#include "usfirst/dataset.hpp"
#include "usfirst/errors.hpp"
#include "usfirst/synthetic.hpp"

using namespace usfirst;

namespace {

StudyRecord us_record(std::string id, std::string subject, Side side, double alpha) {
  StudyRecord r;
  r.record_id = std::move(id);
  r.subject_id = std::move(subject);
  r.study_date = *parse_iso_date("2024-03-05");
  r.side = side;
  r.modality = Modality::US;
  Measurements m;
  m.alpha = alpha;
  m.coverage = 55.0;
  r.labels = m;
  r.predictions = m;
  return r;
}

StudyRecord xr_record(std::string id, std::string subject, Side side, double ai,
                      std::optional<double> ce = std::nullopt,
                      std::optional<IhdiGrade> ihdi = std::nullopt) {
  StudyRecord r;
  r.record_id = std::move(id);
  r.subject_id = std::move(subject);
  r.study_date = *parse_iso_date("2024-03-05");
  r.side = side;
  r.modality = Modality::XR;
  Measurements m;
  m.ai = ai;
  m.ce = ce;
  m.ihdi = ihdi;
  r.labels = m;
  return r;
}

StrictPair pair_with(const Measurements& xr) {
  StrictPair p;
  p.xr_record.labels = xr;
  return p;
}

}  // namespace

TEST(IsoDate, ParseAndFormat) {
  const auto d = parse_iso_date("2024-02-29");
  ASSERT_TRUE(d);
  EXPECT_EQ(format_iso_date(*d), "2024-02-29");
  EXPECT_FALSE(parse_iso_date("2023-02-29"));
  EXPECT_FALSE(parse_iso_date("2024-2-1"));
  EXPECT_FALSE(parse_iso_date("yesterday"));
}

TEST(Records, JsonAndCsvEncodingsAgree) {
  CohortSpec spec;
  spec.n_subjects = 12;
  spec.pair_fraction = 0.7;
  spec.unlabeled_xr_fraction = 0.3;
  spec.seed = 42;
  const auto cohort = generate(spec);
  const auto from_json = parse_records_json(records_to_json(cohort.records));
  const auto from_csv = parse_records_csv(records_to_csv(cohort.records));
  EXPECT_TRUE(from_json.rejections.empty());
  EXPECT_TRUE(from_csv.rejections.empty());
  EXPECT_EQ(from_json.records, cohort.records);
  EXPECT_EQ(from_csv.records, cohort.records);
  EXPECT_EQ(from_csv.records, from_json.records);
}

TEST(Records, InvalidRowsAreRejectedNotThrown) {
  const std::string text = R"([
    {"record_id": "a", "subject_id": "s1", "study_date": "2024-01-01", "side": "L",
     "modality": "US", "labels": {"alpha": 60}},
    {"record_id": "b", "subject_id": "s1", "study_date": "2024-01-01", "side": "X",
     "modality": "US", "labels": {"alpha": 60}},
    {"record_id": "a", "subject_id": "s2", "study_date": "2024-01-01", "side": "R",
     "modality": "US", "labels": {"alpha": 60}},
    {"record_id": "c", "subject_id": "s3", "study_date": "2024-01-01", "side": "R",
     "modality": "US", "labels": {"alpha": 200}},
    {"record_id": "d", "subject_id": "s3", "study_date": "2024-01-01", "side": "R",
     "modality": "US"}
  ])";
  const auto r = parse_records_json(text);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].record_id, "a");
  ASSERT_EQ(r.rejections.size(), 4u);
  EXPECT_EQ(r.rejections[0].row, 1u);
  EXPECT_EQ(r.rejections[1].record_id, "a");
  EXPECT_EQ(r.rejections[2].record_id, "c");
  EXPECT_EQ(r.rejections[3].record_id, "d");
}

TEST(Records, MalformedFileThrows) {
  EXPECT_THROW(parse_records_json("{not json"), ParseError);
  EXPECT_THROW(parse_records_json(R"({"record_id": "a"})"), ParseError);
}

TEST(Records, EffectiveLabelsFallBackToAnnotation) {
  Measurements truth;
  truth.alpha = 63.0;
  truth.beta = 50.0;
  truth.coverage = 47.0;
  StudyRecord r = us_record("u", "s", Side::Left, 0.0);
  r.labels.reset();
  r.annotation = annotate_from_truth(truth, Side::Left);
  const auto m = effective_labels(r);
  ASSERT_TRUE(m);
  EXPECT_NEAR(*m->alpha, 63.0, 1e-9);
  EXPECT_NEAR(*m->coverage, 47.0, 1e-9);
}

TEST(Splits, PartitionMatchesSubjectCounts) {
  std::vector<StudyRecord> records;
  std::vector<SplitAssignment> assignment;
  auto add_subjects = [&](int count, Split split, const std::string& prefix) {
    for (int i = 0; i < count; ++i) {
      const std::string s = prefix + std::to_string(i);
      assignment.push_back({split, s});
      // Unequal multiplicities: subjects contribute 1 to 3 records.
      for (int k = 0; k <= i % 3; ++k) {
        records.push_back(us_record(s + "-" + std::to_string(k), s, Side::Left, 60));
      }
    }
  };
  add_subjects(30, Split::PostTrain, "p");
  add_subjects(7, Split::Calibration, "c");
  add_subjects(38, Split::Evaluation, "e");

  auto expected = [](int count) {
    int n = 0;
    for (int i = 0; i < count; ++i) n += i % 3 + 1;
    return static_cast<std::size_t>(n);
  };
  const auto parts = assign_splits(records, assignment);
  EXPECT_EQ(parts.post_train.size(), expected(30));
  EXPECT_EQ(parts.calibration.size(), expected(7));
  EXPECT_EQ(parts.evaluation.size(), expected(38));
  for (auto split : {Split::PostTrain, Split::Calibration, Split::Evaluation}) {
    for (const auto& r : parts.get(split)) {
      const auto it = std::find_if(assignment.begin(), assignment.end(),
                                   [&](const auto& a) { return a.subject_id == r.subject_id; });
      EXPECT_EQ(it->split, split);
    }
  }
}

TEST(Splits, BadAssignmentsThrow) {
  const std::vector<StudyRecord> records{us_record("a", "s1", Side::Left, 60),
                                         us_record("b", "s2", Side::Left, 60)};
  EXPECT_THROW(assign_splits(records, {{Split::Calibration, "s1"}}), MissingAssignment);
  EXPECT_THROW(assign_splits(records, {{Split::Calibration, "s1"},
                                       {Split::Evaluation, "s1"},
                                       {Split::Evaluation, "s2"}}),
               DuplicateAssignment);
}

TEST(Splits, CsvRoundTrip) {
  const std::vector<SplitAssignment> s{{Split::PostTrain, "a"},
                                       {Split::Calibration, "b"},
                                       {Split::Evaluation, "c"}};
  EXPECT_EQ(parse_splits_csv(splits_to_csv(s)), s);
  EXPECT_THROW(parse_splits_csv("subject_id,split\na,holdout\n"), ParseError);
}

TEST(Pairing, DuplicateUsKeepsSmallestIdAndWarns) {
  const std::vector<StudyRecord> eval{us_record("us-b", "s1", Side::Left, 61),
                                      us_record("us-a", "s1", Side::Left, 70),
                                      xr_record("xr-1", "s1", Side::Left, 20)};
  const auto result = build_strict_pairs(eval);
  ASSERT_EQ(result.pairs.size(), 1u);
  EXPECT_EQ(result.pairs[0].us_record.record_id, "us-a");
  EXPECT_EQ(result.pairs[0].xr_record.record_id, "xr-1");
  EXPECT_EQ(result.pairs[0].pair_id, "s1_2024-03-05_L");
  EXPECT_EQ(result.warnings.size(), 1u);
}

TEST(Pairing, KeyNeedsSameSideAndDate) {
  StudyRecord other_date = xr_record("xr-2", "s1", Side::Right, 20);
  other_date.study_date = *parse_iso_date("2024-03-06");
  const std::vector<StudyRecord> eval{us_record("us-1", "s1", Side::Left, 61),
                                      xr_record("xr-1", "s1", Side::Right, 20),
                                      us_record("us-2", "s1", Side::Right, 61), other_date};
  const auto result = build_strict_pairs(eval);
  ASSERT_EQ(result.pairs.size(), 1u);
  EXPECT_EQ(result.pairs[0].pair_id, "s1_2024-03-05_R");
  EXPECT_EQ(result.leftovers.size(), 2u);
}

TEST(Pairing, PairsAreSortedByKey) {
  std::vector<StudyRecord> eval;
  for (const std::string s : {"s3", "s1", "s2"}) {
    for (auto side : {Side::Right, Side::Left}) {
      eval.push_back(xr_record(s + std::string(to_string(side)) + "x", s, side, 20));
      eval.push_back(us_record(s + std::string(to_string(side)) + "u", s, side, 60));
    }
  }
  const auto result = build_strict_pairs(eval);
  ASSERT_EQ(result.pairs.size(), 6u);
  EXPECT_TRUE(std::is_sorted(result.pairs.begin(), result.pairs.end(),
                             [](const auto& a, const auto& b) { return a.pair_id < b.pair_id; }));
}

TEST(Abnormality, DefaultRuleArithmetic) {
  const AbnormalityRule rule;
  Measurements m;
  m.ai = 35;
  EXPECT_EQ(label_abnormality(pair_with(m), rule), Abnormality::Abnormal);
  m = {};
  m.ai = 20;
  m.ce = 30;
  m.ihdi = IhdiGrade::I;
  EXPECT_EQ(label_abnormality(pair_with(m), rule), Abnormality::Normal);
  m.ce = 20;  // CE <= threshold is abnormal
  EXPECT_EQ(label_abnormality(pair_with(m), rule), Abnormality::Abnormal);
  m.ce = 30;
  m.ihdi = IhdiGrade::II;
  EXPECT_EQ(label_abnormality(pair_with(m), rule), Abnormality::Abnormal);
  m.ihdi = IhdiGrade::I;
  m.ai = 30;  // AI >= threshold is abnormal
  EXPECT_EQ(label_abnormality(pair_with(m), rule), Abnormality::Abnormal);
}

TEST(Abnormality, NoGroundTruthIsUnknown) {
  StrictPair p;
  EXPECT_EQ(label_abnormality(p, {}), Abnormality::Unknown);
  Measurements m;
  m.alpha = 50;
  p.xr_record.labels = m;
  EXPECT_EQ(label_abnormality(p, {}), Abnormality::Unknown);
}

TEST(Abnormality, RuleValidation) {
  EXPECT_THROW(validate(AbnormalityRule{30, 20, IhdiGrade::I}), InvalidArgument);
  EXPECT_THROW(validate(AbnormalityRule{std::nan(""), 20, IhdiGrade::II}), InvalidArgument);
  EXPECT_NO_THROW(validate(AbnormalityRule{}));
}
