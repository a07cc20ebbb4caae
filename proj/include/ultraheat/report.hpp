#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace ultraheat {

using Json = nlohmann::ordered_json;

enum class Status { Pass, Fail, Vacuous };

std::string_view to_string(Status status);

/// One verified inequality or identity. `lhs <= rhs + margin` decides the
/// status; identities store the measured gap as lhs and 0 as rhs.
struct CheckRecord {
  std::string name;
  Json params = Json::object();
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  Status status = Status::Vacuous;
  Json witness = Json::object();
  std::string note;

  bool passed() const { return status != Status::Fail; }
};

/// Builds a record and sets status from lhs <= rhs + margin.
CheckRecord make_check(std::string name, double lhs, double rhs, double margin,
                       Json params = Json::object(), Json witness = Json::object());
CheckRecord make_vacuous(std::string name, std::string note, Json params = Json::object());

Json to_json(const CheckRecord& record);

/// Collects many instances of one inequality and keeps the tightest, judged
/// by (lhs - rhs - margin) relative to max(|lhs|, |rhs|, margin).
class WorstCase {
 public:
  void offer(double lhs, double rhs, double margin, Json witness = Json::object());
  bool empty() const { return count_ == 0; }
  std::size_t count() const { return count_; }
  /// Vacuous with `vacuous_note` when nothing was offered.
  CheckRecord record(std::string name, Json params = Json::object(),
                     std::string vacuous_note = "no instance to check") const;

 private:
  std::size_t count_ = 0;
  std::size_t failures_ = 0;
  double key_ = 0.0;
  double lhs_ = 0.0;
  double rhs_ = 0.0;
  double margin_ = 0.0;
  Json witness_;
};

struct CheckSummary {
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::size_t vacuous = 0;
};

CheckSummary summarize(const std::vector<CheckRecord>& records);
bool all_passed(const std::vector<CheckRecord>& records);

}  // namespace ultraheat
