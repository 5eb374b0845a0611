#include "phd/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "phd/error.hpp"

namespace phd {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size())
    throw ContractError("table '" + name + "': row has " + std::to_string(row.size()) +
                        " cells, expected " + std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& col) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == col) return i;
  throw ContractError("table '" + name + "' has no column '" + col + "'");
}

double Table::number(std::size_t row, const std::string& col) const {
  const Cell& c = rows.at(row).at(column(col));
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  throw ContractError("table '" + name + "' column '" + col + "' is not numeric");
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace {

Json cell_json(const Table::Cell& c) {
  return std::visit([](const auto& v) { return Json(v); }, c);
}

std::string cell_text(const Table::Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    std::string q = "\"";
    for (char ch : *s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + '"';
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return format_real(std::get<double>(c));
}

}  // namespace

Json to_json(const Table& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    Json row = Json::object();
    for (std::size_t i = 0; i < r.size(); ++i) row[t.columns[i]] = cell_json(r[i]);
    rows.push_back(std::move(row));
  }
  return Json{{"table", t.name}, {"columns", t.columns}, {"rows", std::move(rows)}};
}

std::string to_csv(const Table& t) {
  std::ostringstream out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << cell_text(r[i]);
    out << '\n';
  }
  return out.str();
}

Json to_json(const DiscrepancyReport& r) {
  Json details = Json::object();
  for (const auto& [k, v] : r.details) details[k] = v;
  return Json{{"measure", r.measure}, {"value", r.value},       {"method", to_string(r.method)},
              {"n_s", r.n_s},         {"n_t", r.n_t},           {"seeds", r.seeds},
              {"details", std::move(details)}};
}

Json to_json(const BoundReport& r) {
  Json terms = Json::array();
  for (const auto& t : r.terms)
    terms.push_back(Json{{"name", t.name}, {"value", t.value}, {"kind", to_string(t.kind)}});
  return Json{{"bound", r.id},
              {"terms", std::move(terms)},
              {"total", r.total},
              {"feasible", r.sum(TermKind::feasible)},
              {"diagnostic", r.sum(TermKind::diagnostic)},
              {"delta", r.delta},
              {"n_t", r.n_t}};
}

Json to_json(const RademacherEstimate& r) {
  return Json{{"value", r.value},
              {"draws", r.draws},
              {"std_error", r.std_error},
              {"class", r.class_descriptor},
              {"method", r.method}};
}

Json to_json(const SelectionOutcome& r) {
  Json ranking = Json::array();
  for (const auto& s : r.ranking)
    ranking.push_back(Json{{"source", s.index}, {"value", s.value}, {"clean", s.clean}});
  Json j{{"measure", r.measure}, {"sigma", r.sigma},           {"seed", r.seed},
         {"ranking", std::move(ranking)}, {"chosen", r.chosen}, {"score", r.score}};
  j["target_accuracy"] = r.target_accuracy ? Json(*r.target_accuracy) : Json(nullptr);
  return j;
}

Json to_json(const RoundRecord& r) {
  Json j{{"round", r.round},       {"skipped", r.skipped}, {"coverage", r.coverage},
         {"tpl_size", r.tpl_size}, {"tpl_phd", r.tpl_phd}, {"tpl_risk", r.tpl_risk},
         {"bound", to_json(r.bound)}};
  j["target_accuracy"] = r.target_accuracy ? Json(*r.target_accuracy) : Json(nullptr);
  return j;
}

Table bound_table(const BoundReport& r) {
  Table t{r.id, {"term", "kind", "value"}, {}};
  for (const auto& term : r.terms) t.add_row({term.name, to_string(term.kind), term.value});
  t.add_row({std::string("total"), std::string("sum"), r.total});
  return t;
}

Table discrepancy_table(const std::vector<DiscrepancyReport>& rs) {
  Table t{"discrepancy", {"measure", "method", "value", "n_s", "n_t"}, {}};
  for (const auto& r : rs)
    t.add_row({r.measure, to_string(r.method), r.value, static_cast<std::int64_t>(r.n_s),
               static_cast<std::int64_t>(r.n_t)});
  return t;
}

Table selection_table(const SelectionOutcome& r) {
  Table t{"ranking", {"rank", "source", "value", "clean", "chosen"}, {}};
  for (std::size_t i = 0; i < r.ranking.size(); ++i)
    t.add_row({static_cast<std::int64_t>(i + 1), static_cast<std::int64_t>(r.ranking[i].index),
               r.ranking[i].value, static_cast<std::int64_t>(r.ranking[i].clean ? 1 : 0),
               static_cast<std::int64_t>(i < r.chosen.size() ? 1 : 0)});
  return t;
}

Json envelope(const std::string& command, const Json& config, Json result) {
  return Json{{"artifact", "phd"},
              {"version", kVersion},
              {"command", command},
              {"config", config},
              {"result", std::move(result)}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace phd
