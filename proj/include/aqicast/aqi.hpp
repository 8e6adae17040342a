#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aqicast/table.hpp"

namespace aqicast::aqi {

struct Segment {
  double conc_lo = 0.0;
  double conc_hi = 0.0;
  double index_lo = 0.0;
  double index_hi = 0.0;

  double slope() const { return (index_hi - index_lo) / (conc_hi - conc_lo); }
};

/// Piecewise-linear concentration -> sub-index map per pollutant.
///
/// Segments are sorted, contiguous in concentration (each conc_lo equals the
/// previous conc_hi), non-decreasing in index, and every pollutant tops out at
/// index 500. The constructor rejects tables that break any of these.
class BreakpointTable {
 public:
  explicit BreakpointTable(std::map<std::string, std::vector<Segment>> segments);

  /// CSV with columns pollutant,conc_lo,conc_hi,index_lo,index_hi.
  static BreakpointTable load(const std::filesystem::path& path);

  bool contains(const std::string& pollutant) const { return segments_.count(pollutant) > 0; }
  const std::vector<Segment>& segments(const std::string& pollutant) const;
  /// Pollutants in file order.
  const std::vector<std::string>& pollutants() const { return order_; }

 private:
  std::map<std::string, std::vector<Segment>> segments_;
  std::vector<std::string> order_;
};

/// Sub-index of one concentration. Uses the segment with conc_lo <= conc < conc_hi;
/// concentrations above the table extrapolate along the top segment.
double sub_index(const std::string& pollutant, double conc, const BreakpointTable& table);

struct AqiResult {
  std::map<std::string, double> sub_indices;
  std::optional<double> aqi;
  std::string dominant;
  bool valid = false;
  std::string reason;
};

inline constexpr const char* kReasonTooFew = "fewer than three pollutants";
inline constexpr const char* kReasonNoParticulate = "no particulate matter sub-index";

/// Valid when at least three pollutants have sub-indices and PM2.5 or PM10 is
/// among them; the AQI is then the largest sub-index. Never throws for a bad
/// record, it is returned invalid with a reason.
AqiResult compute_aqi(const StationDayRecord& record, const BreakpointTable& table);

enum class AqiMode {
  /// Keep a supplied AQI; fill only rows where it is absent.
  kPassthrough,
  /// Replace the AQI column with the computed value (missing when invalid).
  kRecompute,
};

struct AnnotateOptions {
  AqiMode mode = AqiMode::kPassthrough;
  bool append_sub_indices = false;
  /// Supplied and computed AQI further apart than this count as a disagreement.
  double disagreement_tolerance = 0.5;
};

struct AnnotateReport {
  std::size_t rows = 0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  std::map<std::string, std::size_t> invalid_reasons;
  std::map<std::string, std::size_t> dominant_counts;
  std::size_t supplied = 0;
  std::size_t disagreements = 0;
  double max_abs_disagreement = 0.0;

  nlohmann::json to_json() const;
};

/// Computes the AQI for every row; writes the AQI column (named
/// "Air_Quality_Index" when the table has none) and optionally "SI_<pollutant>" columns.
AnnotateReport annotate_table(DataTable& table, const BreakpointTable& bp, const AnnotateOptions& options = {});

}  // namespace aqicast::aqi
