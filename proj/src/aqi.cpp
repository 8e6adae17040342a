#include "aqicast/aqi.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "aqicast/csv.hpp"
#include "aqicast/error.hpp"

namespace aqicast::aqi {
namespace {

double to_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError("breakpoint table: bad number '" + text + "' at " + where);
  }
  return v;
}

}  // namespace

BreakpointTable::BreakpointTable(std::map<std::string, std::vector<Segment>> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) throw ConfigError("breakpoint table is empty");
  for (auto& [name, segs] : segments_) {
    if (segs.empty()) throw ConfigError("breakpoint table: no segments for " + name);
    std::stable_sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.conc_lo < b.conc_lo; });
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const auto& s = segs[k];
      if (s.conc_lo < 0 || s.index_lo < 0) throw ConfigError("breakpoint table: negative value for " + name);
      if (!(s.conc_hi > s.conc_lo)) throw ConfigError("breakpoint table: empty segment for " + name);
      if (s.index_hi < s.index_lo) throw ConfigError("breakpoint table: decreasing index for " + name);
      if (k > 0) {
        if (s.conc_lo != segs[k - 1].conc_hi) {
          throw ConfigError("breakpoint table: gap or overlap in " + name + " at " + csv::format_double(s.conc_lo));
        }
        if (s.index_lo < segs[k - 1].index_hi) {
          throw ConfigError("breakpoint table: index decreases across segments of " + name);
        }
      }
    }
    if (segs.back().index_hi != 500.0) throw ConfigError("breakpoint table: " + name + " does not top out at 500");
  }
  if (order_.empty()) {
    for (const auto& [name, segs] : segments_) order_.push_back(name);
  }
}

BreakpointTable BreakpointTable::load(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw ConfigError("breakpoint table " + path.string() + " is empty");
  const csv::Row expected{"pollutant", "conc_lo", "conc_hi", "index_lo", "index_hi"};
  if (rows.front() != expected) {
    throw ConfigError("breakpoint table " + path.string() + ": header must be pollutant,conc_lo,conc_hi,index_lo,index_hi");
  }
  std::map<std::string, std::vector<Segment>> segments;
  std::vector<std::string> order;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = path.string() + ":" + std::to_string(r + 1);
    if (row.size() != 5) throw ConfigError("breakpoint table: expected 5 fields at " + where);
    if (!segments.count(row[0])) order.push_back(row[0]);
    segments[row[0]].push_back({to_number(row[1], where), to_number(row[2], where), to_number(row[3], where),
                                to_number(row[4], where)});
  }
  BreakpointTable table(std::move(segments));
  table.order_ = std::move(order);
  return table;
}

const std::vector<Segment>& BreakpointTable::segments(const std::string& pollutant) const {
  auto it = segments_.find(pollutant);
  if (it == segments_.end()) throw ConfigError("unknown pollutant '" + pollutant + "'");
  return it->second;
}

double sub_index(const std::string& pollutant, double conc, const BreakpointTable& table) {
  const auto& segs = table.segments(pollutant);
  if (std::isnan(conc) || conc < 0.0) {
    throw DomainError("negative concentration for " + pollutant + ": " + csv::format_double(conc));
  }
  // Last segment whose conc_lo <= conc; the top segment extrapolates.
  auto it = std::upper_bound(segs.begin(), segs.end(), conc,
                             [](double c, const Segment& s) { return c < s.conc_lo; });
  const Segment& s = it == segs.begin() ? segs.front() : *std::prev(it);
  return s.index_lo + (s.index_hi - s.index_lo) / (s.conc_hi - s.conc_lo) * (conc - s.conc_lo);
}

AqiResult compute_aqi(const StationDayRecord& record, const BreakpointTable& table) {
  AqiResult result;
  for (const auto& pollutant : table.pollutants()) {
    auto it = record.readings.find(pollutant);
    if (it == record.readings.end() || !it->second) continue;
    if (*it->second < 0.0) {
      result.reason = "negative concentration for " + pollutant;
      return result;
    }
    result.sub_indices[pollutant] = sub_index(pollutant, *it->second, table);
  }
  if (result.sub_indices.size() < 3) {
    result.reason = kReasonTooFew;
    return result;
  }
  if (!result.sub_indices.count("PM2.5") && !result.sub_indices.count("PM10")) {
    result.reason = kReasonNoParticulate;
    return result;
  }
  result.valid = true;
  for (const auto& pollutant : table.pollutants()) {
    auto it = result.sub_indices.find(pollutant);
    if (it == result.sub_indices.end()) continue;
    if (!result.aqi || it->second > *result.aqi) {
      result.aqi = it->second;
      result.dominant = pollutant;
    }
  }
  return result;
}

nlohmann::json AnnotateReport::to_json() const {
  return {{"rows", rows},
          {"valid", valid},
          {"invalid", invalid},
          {"invalid_reasons", invalid_reasons},
          {"dominant_counts", dominant_counts},
          {"supplied", supplied},
          {"disagreements", disagreements},
          {"max_abs_disagreement", max_abs_disagreement}};
}

AnnotateReport annotate_table(DataTable& table, const BreakpointTable& bp, const AnnotateOptions& options) {
  AnnotateReport report;
  report.rows = table.rows();

  NumericColumn* aqi_col = table.find("AQI");
  if (!aqi_col) {
    table.numeric.push_back({"Air_Quality_Index", "AQI", ColumnKind::kNumeric,
                             std::vector<Cell>(table.rows())});
    aqi_col = &table.numeric.back();
  }
  const std::size_t aqi_slot = static_cast<std::size_t>(aqi_col - table.numeric.data());

  std::vector<std::vector<Cell>> sub_columns(bp.pollutants().size(), std::vector<Cell>(table.rows()));
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto result = compute_aqi(table.record(r), bp);
    auto& cell = table.numeric[aqi_slot].cells[r];
    if (result.valid) {
      ++report.valid;
      ++report.dominant_counts[result.dominant];
    } else {
      ++report.invalid;
      ++report.invalid_reasons[result.reason];
    }
    if (cell) {
      ++report.supplied;
      if (result.aqi) {
        const double diff = std::abs(*cell - *result.aqi);
        report.max_abs_disagreement = std::max(report.max_abs_disagreement, diff);
        if (diff > options.disagreement_tolerance) ++report.disagreements;
      }
    }
    if (options.mode == AqiMode::kRecompute || !cell) cell = result.aqi;
    for (std::size_t p = 0; p < bp.pollutants().size(); ++p) {
      auto it = result.sub_indices.find(bp.pollutants()[p]);
      if (it != result.sub_indices.end()) sub_columns[p][r] = it->second;
    }
  }

  if (options.append_sub_indices) {
    for (std::size_t p = 0; p < bp.pollutants().size(); ++p) {
      const std::string name = "SI_" + bp.pollutants()[p];
      if (table.find(name)) throw SchemaError("column '" + name + "' already exists");
      table.numeric.push_back({name, name, ColumnKind::kNumeric, std::move(sub_columns[p])});
    }
  }
  return report;
}

}  // namespace aqicast::aqi
