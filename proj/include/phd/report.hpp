#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "phd/adapt.hpp"
#include "phd/bounds.hpp"
#include "phd/discrepancy.hpp"
#include "phd/tritrain.hpp"

namespace phd {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// A rectangular result with named columns. Cells are text, integers or reals.
struct Table {
  using Cell = std::variant<std::string, std::int64_t, double>;
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
  std::size_t column(const std::string& name) const;  // throws ContractError when absent
  double number(std::size_t row, const std::string& col) const;
};

Json to_json(const Table& t);
// Header row then one line per row; reals use the shortest round-trip form.
std::string to_csv(const Table& t);

Json to_json(const DiscrepancyReport& r);
Json to_json(const BoundReport& r);
Json to_json(const RademacherEstimate& r);
Json to_json(const SelectionOutcome& r);
Json to_json(const RoundRecord& r);

Table bound_table(const BoundReport& r);
Table discrepancy_table(const std::vector<DiscrepancyReport>& rs);
Table selection_table(const SelectionOutcome& r);

// {"artifact", "version", "command", "config", "result"}.
Json envelope(const std::string& command, const Json& config, Json result);

std::string format_real(double v);
// Two-space indented JSON with a trailing newline.
std::string dump(const Json& j);

}  // namespace phd
