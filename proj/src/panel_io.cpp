#include "gsc/panel_io.hpp"

#include "gsc/errors.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace gsc {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_optional_double(std::string_view text, std::size_t line_no, std::string_view column) {
  text = trim(text);
  if (text.empty() || text == "NA" || text == "nan" || text == "NaN") return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    std::ostringstream msg;
    msg << "panel csv line " << line_no << ": cannot parse " << column << " value '" << text << "'";
    throw ValidationError(msg.str());
  }
  return v;
}

bool looks_like_date(std::string_view s) { return s.size() == 10 && s[4] == '-' && s[7] == '-'; }

// A time-like field before mapping to periods: either a period index or a day count.
struct RawTime {
  std::int64_t value = 0;
  bool is_date = false;
};

std::optional<RawTime> parse_time(std::string_view text, std::size_t line_no, std::string_view column) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (looks_like_date(text)) return RawTime{parse_iso_date(text), true};
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    std::ostringstream msg;
    msg << "panel csv line " << line_no << ": " << column << " '" << text << "' is neither an integer nor an ISO date";
    throw ValidationError(msg.str());
  }
  return RawTime{v, false};
}

std::int64_t floor_div(std::int64_t a, double b) { return static_cast<std::int64_t>(std::floor(static_cast<double>(a) / b)); }

}  // namespace

std::int64_t parse_iso_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc() && ptr == text.data() + pos + len;
  };
  if (!looks_like_date(text) || !num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d)) {
    throw ValidationError("invalid ISO date '" + std::string(text) + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw ValidationError("invalid ISO date '" + std::string(text) + "'");
  return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

PanelDataset read_panel_csv(std::istream& in, const CsvOptions& opts) {
  if (!(opts.cadence_days > 0.0)) throw ValidationError("cadence_days must be positive");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("panel csv: missing header");
  const auto header = split_line(line);
  std::map<std::string, std::size_t> col;
  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const std::string name(trim(header[k]));
    if (name.rfind("cov_", 0) == 0) {
      cov_cols.push_back(k);
      cov_names.push_back(name.substr(4));
    } else {
      col[name] = k;
    }
  }
  for (const std::string& required : {std::string("unit_id"), std::string("time"), opts.outcome_column}) {
    if (!col.count(required)) throw ValidationError("panel csv: header lacks required column '" + required + "'");
  }
  auto optional_col = [&](const std::string& name, const char* default_name) -> std::optional<std::size_t> {
    const auto it = col.find(name);
    if (it != col.end()) return it->second;
    if (name != default_name) throw ValidationError("panel csv: header lacks configured column '" + name + "'");
    return std::nullopt;
  };
  const auto c_treat = optional_col("treatment_time", "treatment_time");
  const auto c_cond = optional_col(opts.condition_column, "condition_value");
  const auto c_base = optional_col(opts.baseline_column, "baseline");

  struct Pending {
    PanelRecord record;
    RawTime time;
    std::optional<RawTime> treat;
  };
  std::vector<Pending> rows;
  std::optional<bool> date_mode;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_line(line);
    if (f.size() != header.size()) {
      std::ostringstream msg;
      msg << "panel csv line " << line_no << ": expected " << header.size() << " fields, found " << f.size();
      throw ValidationError(msg.str());
    }
    Pending p;
    p.record.unit_id = std::string(trim(f[col["unit_id"]]));
    if (p.record.unit_id.empty()) throw ValidationError("panel csv line " + std::to_string(line_no) + ": empty unit_id");
    const auto t = parse_time(f[col["time"]], line_no, "time");
    if (!t) throw ValidationError("panel csv line " + std::to_string(line_no) + ": empty time");
    p.time = *t;
    if (c_treat) p.treat = parse_time(f[*c_treat], line_no, "treatment_time");
    for (const auto& rt : {std::optional<RawTime>(p.time), p.treat}) {
      if (!rt) continue;
      if (date_mode && *date_mode != rt->is_date) {
        throw ValidationError("panel csv line " + std::to_string(line_no) + ": mixes ISO dates and integer periods");
      }
      date_mode = rt->is_date;
    }
    p.record.outcome = parse_optional_double(f[col[opts.outcome_column]], line_no, "outcome");
    if (c_cond) p.record.condition_value = parse_optional_double(f[*c_cond], line_no, "condition_value");
    if (c_base) p.record.baseline = parse_optional_double(f[*c_base], line_no, "baseline");
    for (std::size_t j = 0; j < cov_cols.size(); ++j) {
      p.record.covariates.push_back(parse_optional_double(f[cov_cols[j]], line_no, header[cov_cols[j]]));
    }
    rows.push_back(std::move(p));
  }
  if (rows.empty()) throw ValidationError("panel csv: no data rows");

  std::int64_t origin = rows.front().time.value;
  for (const auto& p : rows) origin = std::min(origin, p.time.value);
  std::vector<PanelRecord> records;
  records.reserve(rows.size());
  for (auto& p : rows) {
    if (p.time.is_date) {
      p.record.time = floor_div(p.time.value - origin, opts.cadence_days) + 1;
      if (p.treat) p.record.treatment_time = floor_div(p.treat->value - origin, opts.cadence_days) + 1;
    } else {
      p.record.time = p.time.value;
      if (p.treat) p.record.treatment_time = p.treat->value;
    }
    records.push_back(std::move(p.record));
  }
  return load_panel(records, cov_names);
}

PanelDataset read_panel_csv(const std::filesystem::path& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open panel csv '" + path.string() + "'");
  return read_panel_csv(in, opts);
}

void write_panel_csv(std::ostream& out, const PanelDataset& panel) {
  out << "unit_id,time,outcome,treatment_time,condition_value";
  if (panel.baseline()) out << ",baseline";
  for (const auto& name : panel.covariate_names()) out << ",cov_" << name;
  out << '\n';
  for (Index i = 0; i < panel.n_units(); ++i) {
    const auto& t0 = panel.treatment_time(i);
    const auto& cv = panel.condition_value(i);
    const std::string treat = t0 ? std::to_string(*t0) : std::string();
    const std::string cond = cv ? format_number(*cv) : std::string();
    for (Index c = 0; c < panel.n_periods(); ++c) {
      out << panel.unit_ids()[static_cast<std::size_t>(i)] << ',' << panel.time_at(c) << ','
          << format_number(panel.outcome()(i, c)) << ',' << treat << ',' << cond;
      if (panel.baseline()) out << ',' << format_number((*panel.baseline())(i, c));
      for (const auto& g : panel.covariates()) out << ',' << format_number(g(i, c));
      out << '\n';
    }
  }
}

}  // namespace gsc
