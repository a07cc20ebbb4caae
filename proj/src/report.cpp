#include "ultraheat/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ultraheat {

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Vacuous: return "vacuous";
  }
  return "fail";
}

CheckRecord make_check(std::string name, double lhs, double rhs, double margin, Json params,
                       Json witness) {
  CheckRecord r;
  r.name = std::move(name);
  r.params = std::move(params);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = margin;
  r.witness = std::move(witness);
  const bool ok = std::isfinite(lhs) ? lhs <= rhs + margin : false;
  r.status = ok ? Status::Pass : Status::Fail;
  return r;
}

CheckRecord make_vacuous(std::string name, std::string note, Json params) {
  CheckRecord r;
  r.name = std::move(name);
  r.params = std::move(params);
  r.status = Status::Vacuous;
  r.note = std::move(note);
  return r;
}

namespace {
Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}
}  // namespace

Json to_json(const CheckRecord& record) {
  Json j;
  j["name"] = record.name;
  j["params"] = record.params;
  j["measured"] = number(record.lhs);
  j["bound"] = number(record.rhs);
  j["margin"] = number(record.margin);
  j["status"] = std::string(to_string(record.status));
  j["witness"] = record.witness;
  if (!record.note.empty()) j["note"] = record.note;
  return j;
}

CheckSummary summarize(const std::vector<CheckRecord>& records) {
  CheckSummary s;
  for (const auto& r : records) {
    switch (r.status) {
      case Status::Pass: ++s.pass; break;
      case Status::Fail: ++s.fail; break;
      case Status::Vacuous: ++s.vacuous; break;
    }
  }
  return s;
}

bool all_passed(const std::vector<CheckRecord>& records) {
  for (const auto& r : records) {
    if (r.status == Status::Fail) return false;
  }
  return true;
}

void WorstCase::offer(double lhs, double rhs, double margin, Json witness) {
  const double scale = std::max({std::abs(lhs), std::isfinite(rhs) ? std::abs(rhs) : 0.0, margin, 1e-300});
  double key = (lhs - rhs - margin) / scale;
  if (!std::isfinite(lhs)) key = std::numeric_limits<double>::infinity();
  if (std::isnan(key)) key = -std::numeric_limits<double>::infinity();
  // 0 <= 0 holds with nothing to spare but says nothing; rank it as slack
  if (lhs == 0.0 && rhs == 0.0) key = -1.0;
  const bool fails = !(std::isfinite(lhs) && lhs <= rhs + margin);
  if (fails) ++failures_;
  if (count_ == 0 || key > key_) {
    key_ = key;
    lhs_ = lhs;
    rhs_ = rhs;
    margin_ = margin;
    witness_ = std::move(witness);
  }
  ++count_;
}

CheckRecord WorstCase::record(std::string name, Json params, std::string vacuous_note) const {
  if (count_ == 0) return make_vacuous(std::move(name), std::move(vacuous_note), std::move(params));
  Json w = witness_;
  w["instances"] = count_;
  w["violations"] = failures_;
  CheckRecord r = make_check(std::move(name), lhs_, rhs_, margin_, std::move(params), std::move(w));
  if (failures_ > 0) r.status = Status::Fail;
  return r;
}

}  // namespace ultraheat
