#include "usfirst/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "json.hpp"
#include "usfirst/errors.hpp"
#include "usfirst/text_io.hpp"

namespace usfirst {

using nlohmann::json;

std::optional<Date> parse_iso_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (!y || !m || !d) return std::nullopt;
  Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
            std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_iso_date(const Date& date) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(date.year()),
                     static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
}

std::optional<Measurements> effective_labels(const StudyRecord& record) {
  if (record.labels) return record.labels;
  if (!record.annotation) return std::nullopt;
  return std::visit(
      [](const auto& ann) -> Measurements {
        using T = std::decay_t<decltype(ann)>;
        if constexpr (std::is_same_v<T, UsAnnotation>) {
          return derive_us(ann);
        } else {
          return derive_xr(ann);
        }
      },
      *record.annotation);
}

bool ossific_flag(const StudyRecord& record) {
  if (record.annotation) {
    if (const auto* us = std::get_if<UsAnnotation>(&*record.annotation)) {
      return us->ossific_point.has_value();
    }
  }
  if (record.labels) return record.labels->ossific_flag;
  if (record.predictions) return record.predictions->ossific_flag;
  return false;
}

std::string check_record(const StudyRecord& record) {
  if (record.record_id.empty()) return "record_id must be non-empty";
  if (record.subject_id.empty()) return "subject_id must be non-empty";
  if (!record.study_date.ok()) return "study_date must be a valid calendar date";
  if (!record.annotation && !record.labels && !record.predictions) {
    return "at least one of annotation, labels, predictions must be present";
  }
  if (record.annotation) {
    const bool is_us = std::holds_alternative<UsAnnotation>(*record.annotation);
    if (is_us != (record.modality == Modality::US)) {
      return "modality must match the annotation variant";
    }
    std::string msg = std::visit([](const auto& ann) { return check_annotation(ann); },
                                 *record.annotation);
    if (!msg.empty()) return msg;
    const Side ann_side = std::visit([](const auto& ann) { return ann.side; }, *record.annotation);
    if (ann_side != record.side) return "annotation side must match record side";
  }
  if (record.labels) {
    if (auto msg = check_measurements(*record.labels); !msg.empty()) return "labels: " + msg;
  }
  if (record.predictions) {
    if (auto msg = check_measurements(*record.predictions); !msg.empty()) {
      return "predictions: " + msg;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// JSON encoding

namespace {

json point_to_json(const Point2d& p) { return json::array({p.x(), p.y()}); }
json line_to_json(const Line2D& l) {
  return json::array({point_to_json(l.p0), point_to_json(l.p1)});
}

Point2d point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("point must be [x, y]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}
Line2D line_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ValidationError("line must be [[x0,y0],[x1,y1]]");
  return {point_from_json(j.at(0)), point_from_json(j.at(1))};
}

json measurements_to_json(const Measurements& m) {
  json j = json::object();
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("alpha", m.alpha);
  put("beta", m.beta);
  put("coverage", m.coverage);
  put("ai", m.ai);
  put("ce", m.ce);
  if (m.ihdi) j["ihdi"] = std::string(to_string(*m.ihdi));
  j["ossific_flag"] = m.ossific_flag;
  return j;
}

Measurements measurements_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("measurements must be an object");
  Measurements m;
  auto get = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  m.alpha = get("alpha");
  m.beta = get("beta");
  m.coverage = get("coverage");
  m.ai = get("ai");
  m.ce = get("ce");
  if (j.contains("ihdi") && !j.at("ihdi").is_null()) {
    const auto& g = j.at("ihdi");
    auto grade = g.is_number_integer() ? parse_ihdi(std::to_string(g.get<int>()))
                                       : parse_ihdi(g.get<std::string>());
    if (!grade) throw ValidationError("ihdi must be one of I, II, III, IV");
    m.ihdi = grade;
  }
  if (j.contains("ossific_flag")) m.ossific_flag = j.at("ossific_flag").get<bool>();
  return m;
}

json annotation_to_json(const Annotation& ann) {
  return std::visit(
      [](const auto& a) -> json {
        using T = std::decay_t<decltype(a)>;
        json j;
        if constexpr (std::is_same_v<T, UsAnnotation>) {
          j["baseline"] = line_to_json(a.baseline);
          j["alpha_line"] = line_to_json(a.alpha_line);
          j["beta_line"] = line_to_json(a.beta_line);
          j["exposed_len"] = a.exposed_len;
          j["total_len"] = a.total_len;
          j["ossific_point"] = a.ossific_point ? point_to_json(*a.ossific_point) : json(nullptr);
        } else {
          j["h_line"] = line_to_json(a.h_line);
          j["p_line"] = line_to_json(a.p_line);
          j["diag45_line"] = line_to_json(a.diag45_line);
          j["h_point"] = point_to_json(a.h_point);
          j["ai_line"] = line_to_json(a.ai_line);
          j["ce_ray"] = line_to_json(a.ce_ray);
        }
        return j;
      },
      ann);
}

Annotation annotation_from_json(const json& j, Modality modality, Side side) {
  if (!j.is_object()) throw ValidationError("annotation must be an object");
  if (modality == Modality::US) {
    UsAnnotation a;
    a.baseline = line_from_json(j.at("baseline"));
    a.alpha_line = line_from_json(j.at("alpha_line"));
    a.beta_line = line_from_json(j.at("beta_line"));
    a.exposed_len = j.at("exposed_len").get<double>();
    a.total_len = j.at("total_len").get<double>();
    if (j.contains("ossific_point") && !j.at("ossific_point").is_null()) {
      a.ossific_point = point_from_json(j.at("ossific_point"));
    }
    a.side = side;
    return a;
  }
  XrAnnotation a;
  a.h_line = line_from_json(j.at("h_line"));
  a.p_line = line_from_json(j.at("p_line"));
  a.diag45_line = line_from_json(j.at("diag45_line"));
  a.h_point = point_from_json(j.at("h_point"));
  a.ai_line = line_from_json(j.at("ai_line"));
  a.ce_ray = line_from_json(j.at("ce_ray"));
  a.side = side;
  return a;
}

std::string required_string(const json& row, const char* key) {
  if (!row.contains(key) || !row.at(key).is_string()) {
    throw ValidationError(fmt::format("{} must be a string", key));
  }
  return row.at(key).get<std::string>();
}

StudyRecord record_from_json(const json& row) {
  if (!row.is_object()) throw ValidationError("record must be an object");
  StudyRecord r;
  r.record_id = required_string(row, "record_id");
  r.subject_id = required_string(row, "subject_id");
  auto date = parse_iso_date(required_string(row, "study_date"));
  if (!date) throw ValidationError("study_date must be ISO-8601 YYYY-MM-DD");
  r.study_date = *date;
  auto side = parse_side(required_string(row, "side"));
  if (!side) throw ValidationError("side must be \"L\" or \"R\"");
  r.side = *side;
  auto modality = parse_modality(required_string(row, "modality"));
  if (!modality) throw ValidationError("modality must be \"US\" or \"XR\"");
  r.modality = *modality;
  if (row.contains("annotation") && !row.at("annotation").is_null()) {
    r.annotation = annotation_from_json(row.at("annotation"), r.modality, r.side);
  }
  if (row.contains("labels") && !row.at("labels").is_null()) {
    r.labels = measurements_from_json(row.at("labels"));
  }
  if (row.contains("predictions") && !row.at("predictions").is_null()) {
    r.predictions = measurements_from_json(row.at("predictions"));
  }
  return r;
}

json record_to_json(const StudyRecord& r) {
  json j;
  j["record_id"] = r.record_id;
  j["subject_id"] = r.subject_id;
  j["study_date"] = format_iso_date(r.study_date);
  j["side"] = std::string(to_string(r.side));
  j["modality"] = std::string(to_string(r.modality));
  j["annotation"] = r.annotation ? annotation_to_json(*r.annotation) : json(nullptr);
  j["labels"] = r.labels ? measurements_to_json(*r.labels) : json(nullptr);
  j["predictions"] = r.predictions ? measurements_to_json(*r.predictions) : json(nullptr);
  return j;
}

// Shared tail of both loaders: invariants and duplicate ids.
void accept_record(LoadResult& result, std::set<std::string>& seen_ids, std::size_t row,
                   StudyRecord record) {
  if (auto msg = check_record(record); !msg.empty()) {
    result.rejections.push_back({row, record.record_id, msg});
    return;
  }
  if (!seen_ids.insert(record.record_id).second) {
    result.rejections.push_back({row, record.record_id, "record_id must be unique"});
    return;
  }
  result.records.push_back(std::move(record));
}

}  // namespace

LoadResult parse_records_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("records JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("records JSON: top level must be an array");
  LoadResult result;
  std::set<std::string> seen;
  for (std::size_t row = 0; row < doc.size(); ++row) {
    const json& item = doc[row];
    std::string id = item.is_object() && item.contains("record_id") &&
                             item.at("record_id").is_string()
                         ? item.at("record_id").get<std::string>()
                         : std::string();
    try {
      accept_record(result, seen, row, record_from_json(item));
    } catch (const ValidationError& e) {
      result.rejections.push_back({row, id, e.what()});
    } catch (const json::exception& e) {
      result.rejections.push_back({row, id, std::string("malformed field: ") + e.what()});
    }
  }
  return result;
}

std::string records_to_json(const std::vector<StudyRecord>& records) {
  json doc = json::array();
  for (const auto& r : records) doc.push_back(record_to_json(r));
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// CSV encoding. One flat row per record; empty cells mean "absent".

namespace {

constexpr std::array<const char*, 5> kKeyColumns = {"record_id", "subject_id", "study_date",
                                                    "side", "modality"};
constexpr std::array<const char*, 3> kUsLines = {"us_baseline", "us_alpha_line", "us_beta_line"};
constexpr std::array<const char*, 5> kXrLines = {"xr_h_line", "xr_p_line", "xr_diag45_line",
                                                 "xr_ai_line", "xr_ce_ray"};
constexpr std::array<const char*, 7> kMeasurementFields = {"alpha", "beta", "coverage", "ai",
                                                           "ce",    "ihdi", "ossific"};

std::vector<std::string> csv_columns() {
  std::vector<std::string> cols(kKeyColumns.begin(), kKeyColumns.end());
  auto add_line = [&](const char* name) {
    for (const char* suffix : {"_x0", "_y0", "_x1", "_y1"}) cols.push_back(std::string(name) + suffix);
  };
  for (const char* l : kUsLines) add_line(l);
  for (const char* c : {"us_exposed_len", "us_total_len", "us_ossific_x", "us_ossific_y"}) {
    cols.emplace_back(c);
  }
  for (const char* l : kXrLines) add_line(l);
  cols.emplace_back("xr_h_point_x");
  cols.emplace_back("xr_h_point_y");
  for (const char* prefix : {"label_", "pred_"}) {
    for (const char* f : kMeasurementFields) cols.push_back(std::string(prefix) + f);
  }
  return cols;
}

using Row = std::map<std::string, std::string>;

void put_line(Row& row, const std::string& name, const Line2D& l) {
  row[name + "_x0"] = format_number(l.p0.x());
  row[name + "_y0"] = format_number(l.p0.y());
  row[name + "_x1"] = format_number(l.p1.x());
  row[name + "_y1"] = format_number(l.p1.y());
}

void put_measurements(Row& row, const std::string& prefix, const Measurements& m) {
  auto put = [&](const char* f, const std::optional<double>& v) {
    if (v) row[prefix + f] = format_number(*v);
  };
  put("alpha", m.alpha);
  put("beta", m.beta);
  put("coverage", m.coverage);
  put("ai", m.ai);
  put("ce", m.ce);
  if (m.ihdi) row[prefix + "ihdi"] = std::string(to_string(*m.ihdi));
  row[prefix + "ossific"] = m.ossific_flag ? "1" : "0";
}

class RowReader {
 public:
  explicit RowReader(const Row& row) : row_(row) {}

  bool any_with_prefix(std::string_view prefix) const {
    for (const auto& [k, v] : row_) {
      if (!v.empty() && std::string_view(k).substr(0, prefix.size()) == prefix) return true;
    }
    return false;
  }

  const std::string& text(const std::string& key) const {
    static const std::string empty;
    auto it = row_.find(key);
    return it == row_.end() ? empty : it->second;
  }

  std::optional<double> maybe_number(const std::string& key) const {
    const auto& t = text(key);
    if (t.empty()) return std::nullopt;
    auto v = parse_number(t);
    if (!v) throw ValidationError(fmt::format("{}: not a number ({})", key, t));
    return v;
  }

  double number(const std::string& key) const {
    auto v = maybe_number(key);
    if (!v) throw ValidationError(fmt::format("{} is required", key));
    return *v;
  }

  Line2D line(const std::string& name) const {
    return {{number(name + "_x0"), number(name + "_y0")},
            {number(name + "_x1"), number(name + "_y1")}};
  }

  Measurements measurements(const std::string& prefix) const {
    Measurements m;
    m.alpha = maybe_number(prefix + "alpha");
    m.beta = maybe_number(prefix + "beta");
    m.coverage = maybe_number(prefix + "coverage");
    m.ai = maybe_number(prefix + "ai");
    m.ce = maybe_number(prefix + "ce");
    if (const auto& g = text(prefix + "ihdi"); !g.empty()) {
      m.ihdi = parse_ihdi(g);
      if (!m.ihdi) throw ValidationError(prefix + "ihdi must be one of I, II, III, IV");
    }
    const auto& o = text(prefix + "ossific");
    if (!o.empty() && o != "0" && o != "1") throw ValidationError(prefix + "ossific must be 0 or 1");
    m.ossific_flag = o == "1";
    return m;
  }

 private:
  const Row& row_;
};

StudyRecord record_from_row(const Row& row) {
  RowReader in(row);
  StudyRecord r;
  r.record_id = in.text("record_id");
  r.subject_id = in.text("subject_id");
  auto date = parse_iso_date(in.text("study_date"));
  if (!date) throw ValidationError("study_date must be ISO-8601 YYYY-MM-DD");
  r.study_date = *date;
  auto side = parse_side(in.text("side"));
  if (!side) throw ValidationError("side must be \"L\" or \"R\"");
  r.side = *side;
  auto modality = parse_modality(in.text("modality"));
  if (!modality) throw ValidationError("modality must be \"US\" or \"XR\"");
  r.modality = *modality;

  const bool has_us = in.any_with_prefix("us_");
  const bool has_xr = in.any_with_prefix("xr_");
  if (has_us && has_xr) throw ValidationError("row mixes US and XR annotation columns");
  if (has_us) {
    if (r.modality != Modality::US) throw ValidationError("modality must match the annotation variant");
    UsAnnotation a;
    a.baseline = in.line("us_baseline");
    a.alpha_line = in.line("us_alpha_line");
    a.beta_line = in.line("us_beta_line");
    a.exposed_len = in.number("us_exposed_len");
    a.total_len = in.number("us_total_len");
    auto ox = in.maybe_number("us_ossific_x");
    auto oy = in.maybe_number("us_ossific_y");
    if (ox.has_value() != oy.has_value()) throw ValidationError("ossific point needs both x and y");
    if (ox) a.ossific_point = Point2d(*ox, *oy);
    a.side = r.side;
    r.annotation = a;
  } else if (has_xr) {
    if (r.modality != Modality::XR) throw ValidationError("modality must match the annotation variant");
    XrAnnotation a;
    a.h_line = in.line("xr_h_line");
    a.p_line = in.line("xr_p_line");
    a.diag45_line = in.line("xr_diag45_line");
    a.ai_line = in.line("xr_ai_line");
    a.ce_ray = in.line("xr_ce_ray");
    a.h_point = {in.number("xr_h_point_x"), in.number("xr_h_point_y")};
    a.side = r.side;
    r.annotation = a;
  }
  if (in.any_with_prefix("label_")) r.labels = in.measurements("label_");
  if (in.any_with_prefix("pred_")) r.predictions = in.measurements("pred_");
  return r;
}

Row row_from_record(const StudyRecord& r) {
  Row row;
  row["record_id"] = r.record_id;
  row["subject_id"] = r.subject_id;
  row["study_date"] = format_iso_date(r.study_date);
  row["side"] = std::string(to_string(r.side));
  row["modality"] = std::string(to_string(r.modality));
  if (r.annotation) {
    if (const auto* a = std::get_if<UsAnnotation>(&*r.annotation)) {
      put_line(row, "us_baseline", a->baseline);
      put_line(row, "us_alpha_line", a->alpha_line);
      put_line(row, "us_beta_line", a->beta_line);
      row["us_exposed_len"] = format_number(a->exposed_len);
      row["us_total_len"] = format_number(a->total_len);
      if (a->ossific_point) {
        row["us_ossific_x"] = format_number(a->ossific_point->x());
        row["us_ossific_y"] = format_number(a->ossific_point->y());
      }
    } else {
      const auto& x = std::get<XrAnnotation>(*r.annotation);
      put_line(row, "xr_h_line", x.h_line);
      put_line(row, "xr_p_line", x.p_line);
      put_line(row, "xr_diag45_line", x.diag45_line);
      put_line(row, "xr_ai_line", x.ai_line);
      put_line(row, "xr_ce_ray", x.ce_ray);
      row["xr_h_point_x"] = format_number(x.h_point.x());
      row["xr_h_point_y"] = format_number(x.h_point.y());
    }
  }
  if (r.labels) put_measurements(row, "label_", *r.labels);
  if (r.predictions) put_measurements(row, "pred_", *r.predictions);
  return row;
}

}  // namespace

LoadResult parse_records_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("records CSV: missing header");
  const auto header = split_csv_line(lines.front());
  const std::set<std::string> known = [] {
    auto cols = csv_columns();
    return std::set<std::string>(cols.begin(), cols.end());
  }();
  for (const char* key : kKeyColumns) {
    if (std::find(header.begin(), header.end(), key) == header.end()) {
      throw ParseError(fmt::format("records CSV: header lacks column {}", key));
    }
  }
  for (const auto& h : header) {
    if (!known.count(h)) throw ParseError("records CSV: unknown column " + h);
  }

  LoadResult result;
  std::set<std::string> seen;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t row_index = i - 1;
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != header.size()) {
      result.rejections.push_back(
          {row_index, fields.empty() ? "" : fields.front(),
           fmt::format("expected {} fields, found {}", header.size(), fields.size())});
      continue;
    }
    Row row;
    for (std::size_t c = 0; c < header.size(); ++c) row[header[c]] = fields[c];
    try {
      accept_record(result, seen, row_index, record_from_row(row));
    } catch (const ValidationError& e) {
      result.rejections.push_back({row_index, row["record_id"], e.what()});
    }
  }
  return result;
}

std::string records_to_csv(const std::vector<StudyRecord>& records) {
  const auto cols = csv_columns();
  std::string out;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out += ',';
    out += cols[c];
  }
  out += '\n';
  for (const auto& r : records) {
    const Row row = row_from_record(r);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out += ',';
      if (auto it = row.find(cols[c]); it != row.end()) out += it->second;
    }
    out += '\n';
  }
  return out;
}

LoadResult load_records(const std::filesystem::path& path, RecordFormat format) {
  const std::string text = read_file(path);
  return format == RecordFormat::Json ? parse_records_json(text) : parse_records_csv(text);
}

LoadResult load_records(const std::filesystem::path& path) {
  return load_records(path, path.extension() == ".csv" ? RecordFormat::Csv : RecordFormat::Json);
}

// ---------------------------------------------------------------------------
// Splits

std::string_view to_string(Split split) {
  switch (split) {
    case Split::PostTrain: return "post_train";
    case Split::Calibration: return "calibration";
    case Split::Evaluation: return "evaluation";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "post_train" || text == "post-train" || text == "train") return Split::PostTrain;
  if (text == "calibration") return Split::Calibration;
  if (text == "evaluation" || text == "eval") return Split::Evaluation;
  return std::nullopt;
}

std::vector<SplitAssignment> parse_splits_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines.front() != "subject_id,split") {
    throw ParseError("splits CSV: header must be \"subject_id,split\"");
  }
  std::vector<SplitAssignment> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 2 || f[0].empty()) {
      throw ParseError(fmt::format("splits CSV: malformed row {}", i - 1));
    }
    auto split = parse_split(f[1]);
    if (!split) throw ParseError(fmt::format("splits CSV: unknown split \"{}\"", f[1]));
    out.push_back({*split, f[0]});
  }
  return out;
}

std::vector<SplitAssignment> load_splits(const std::filesystem::path& path) {
  return parse_splits_csv(read_file(path));
}

std::string splits_to_csv(const std::vector<SplitAssignment>& splits) {
  std::string out = "subject_id,split\n";
  for (const auto& s : splits) out += s.subject_id + "," + std::string(to_string(s.split)) + "\n";
  return out;
}

const std::vector<StudyRecord>& PartitionedDataset::get(Split split) const {
  switch (split) {
    case Split::PostTrain: return post_train;
    case Split::Calibration: return calibration;
    case Split::Evaluation: return evaluation;
  }
  return evaluation;
}

PartitionedDataset assign_splits(const std::vector<StudyRecord>& records,
                                 const std::vector<SplitAssignment>& assignment) {
  std::map<std::string, Split> by_subject;
  for (const auto& a : assignment) {
    if (!by_subject.emplace(a.subject_id, a.split).second) {
      throw DuplicateAssignment("subject " + a.subject_id + " is assigned more than once");
    }
  }
  PartitionedDataset out;
  for (const auto& r : records) {
    auto it = by_subject.find(r.subject_id);
    if (it == by_subject.end()) {
      throw MissingAssignment("subject " + r.subject_id + " has no split assignment");
    }
    switch (it->second) {
      case Split::PostTrain: out.post_train.push_back(r); break;
      case Split::Calibration: out.calibration.push_back(r); break;
      case Split::Evaluation: out.evaluation.push_back(r); break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Strict pairs and abnormality

std::string_view to_string(Abnormality z) {
  switch (z) {
    case Abnormality::Normal: return "0";
    case Abnormality::Abnormal: return "1";
    case Abnormality::Unknown: return "unknown";
  }
  return "?";
}

void validate(const AbnormalityRule& rule) {
  if (!std::isfinite(rule.ai_threshold) || !std::isfinite(rule.ce_threshold)) {
    throw InvalidArgument("abnormality thresholds must be finite");
  }
  if (rule.ihdi_min_abnormal == IhdiGrade::I) {
    throw InvalidArgument("ihdi_min_abnormal must be II, III or IV");
  }
}

Abnormality label_abnormality(const StrictPair& pair, const AbnormalityRule& rule) {
  const auto labels = effective_labels(pair.xr_record);
  if (!labels || !labels->has_xr_ground_truth()) return Abnormality::Unknown;
  const bool abnormal = (labels->ai && *labels->ai >= rule.ai_threshold) ||
                        (labels->ce && *labels->ce <= rule.ce_threshold) ||
                        (labels->ihdi && *labels->ihdi >= rule.ihdi_min_abnormal);
  return abnormal ? Abnormality::Abnormal : Abnormality::Normal;
}

std::string make_pair_id(const std::string& subject_id, const Date& date, Side side) {
  return subject_id + "_" + format_iso_date(date) + "_" + std::string(to_string(side));
}

PairingResult build_strict_pairs(const std::vector<StudyRecord>& eval_records,
                                 const AbnormalityRule& rule) {
  using Key = std::tuple<std::string, Date, Side>;
  struct Group {
    std::vector<const StudyRecord*> us;
    std::vector<const StudyRecord*> xr;
  };
  std::map<Key, Group> groups;
  for (const auto& r : eval_records) {
    auto& g = groups[Key{r.subject_id, r.study_date, r.side}];
    (r.modality == Modality::US ? g.us : g.xr).push_back(&r);
  }

  auto by_id = [](const StudyRecord* a, const StudyRecord* b) { return a->record_id < b->record_id; };
  PairingResult result;
  for (auto& [key, g] : groups) {
    std::sort(g.us.begin(), g.us.end(), by_id);
    std::sort(g.xr.begin(), g.xr.end(), by_id);
    const auto& [subject, date, side] = key;
    const std::string id = make_pair_id(subject, date, side);
    if (g.us.empty() || g.xr.empty()) {
      for (const auto* r : g.us) result.leftovers.push_back({r->record_id, "no XR record for " + id});
      for (const auto* r : g.xr) result.leftovers.push_back({r->record_id, "no US record for " + id});
      continue;
    }
    if (g.us.size() > 1 || g.xr.size() > 1) {
      result.warnings.push_back(fmt::format("{}: {} US and {} XR records; using {} and {}", id,
                                            g.us.size(), g.xr.size(), g.us.front()->record_id,
                                            g.xr.front()->record_id));
      for (std::size_t i = 1; i < g.us.size(); ++i) {
        result.leftovers.push_back({g.us[i]->record_id, "duplicate US record for " + id});
      }
      for (std::size_t i = 1; i < g.xr.size(); ++i) {
        result.leftovers.push_back({g.xr[i]->record_id, "duplicate XR record for " + id});
      }
    }
    StrictPair pair{id, *g.us.front(), *g.xr.front(), Abnormality::Unknown};
    pair.z = label_abnormality(pair, rule);
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

std::string report_to_json(const std::vector<Rejection>& rejections,
                           const PairingResult* pairing) {
  json doc;
  doc["rejections"] = json::array();
  for (const auto& r : rejections) {
    doc["rejections"].push_back({{"row", r.row}, {"record_id", r.record_id}, {"message", r.message}});
  }
  if (pairing) {
    doc["n_pairs"] = pairing->pairs.size();
    doc["warnings"] = pairing->warnings;
    doc["leftovers"] = json::array();
    for (const auto& l : pairing->leftovers) {
      doc["leftovers"].push_back({{"record_id", l.record_id}, {"reason", l.reason}});
    }
  }
  return doc.dump(2) + "\n";
}

}  // namespace usfirst
