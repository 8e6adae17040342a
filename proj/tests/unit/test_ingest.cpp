#include <gtest/gtest.h>

#include "aqicast/error.hpp"
#include "aqicast/ingest.hpp"
#include "test_util.hpp"

using namespace aqicast;
using testutil::TempDir;
using testutil::write_text;

namespace {

// One station, consecutive days, with `missing` holes spread through `rows` cells.
DataTable holey_table(std::size_t rows, std::size_t missing) {
  DataTable t;
  std::vector<Cell> cells(rows, 1.0);
  // Bresenham-style spread so the holes are not contiguous.
  std::size_t placed = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if ((r + 1) * missing / rows > placed) {
      cells[r].reset();
      ++placed;
    }
  }
  for (std::size_t r = 0; r < rows; ++r) t.add_row("S", "C", "X", Date::from_days(static_cast<long>(r)));
  t.numeric.push_back(testutil::column("v", cells));
  return t;
}

const char* kHeader =
    "State,City,Monitoring Station,Date,PM2.5 (ug/m3),PM10 (ug/m3),Temp (degree C),SO2 (ug/m3)\n";

}  // namespace

TEST(Missingness, FigureTwoPercentages) {
  EXPECT_DOUBLE_EQ(ingest::missing_percent(31746, 38277), 82.9);
  EXPECT_DOUBLE_EQ(ingest::missing_percent(8178, 38277), 21.4);
  EXPECT_DOUBLE_EQ(ingest::missing_percent(1092, 38277), 2.9);
  EXPECT_DOUBLE_EQ(ingest::missing_percent(0, 5), 0.0);
  EXPECT_THROW(ingest::missing_percent(0, 0), DataError);
}

TEST(Missingness, ProfilesFullSizeTable) {
  DataTable t = holey_table(38277, 31746);
  t.numeric.push_back(holey_table(38277, 8178).numeric[0]);
  t.numeric.back().name = t.numeric.back().variable = "RH";
  t.numeric.push_back(holey_table(38277, 1092).numeric[0]);
  t.numeric.back().name = t.numeric.back().variable = "NOx";
  t.numeric[0].name = t.numeric[0].variable = "Temp";
  t.numeric.push_back(testutil::column("complete", std::vector<Cell>(38277, 0.0)));

  const auto profile = ingest::profile_missing(t);
  EXPECT_EQ(profile.total_rows, 38277u);
  ASSERT_EQ(profile.per_column.size(), 3u);
  EXPECT_EQ(profile.per_column[0].column, "Temp");
  EXPECT_EQ(profile.per_column[0].missing_count, 31746u);
  EXPECT_DOUBLE_EQ(profile.per_column[0].missing_percent, 82.9);
  EXPECT_EQ(profile.per_column[1].column, "RH");
  EXPECT_DOUBLE_EQ(profile.per_column[1].missing_percent, 21.4);
  EXPECT_EQ(profile.per_column[2].column, "NOx");
  EXPECT_DOUBLE_EQ(profile.per_column[2].missing_percent, 2.9);
}

TEST(Ingest, ParsesQuotedStationsAndSentinels) {
  TempDir dir("ingest");
  write_text(dir / "a.csv", std::string(kHeader) +
                                "Delhi,Delhi,\"Anand Vihar, Delhi - DPCC\",02-01-2021,120.5,NA,-3.5,-1\n"
                                "Delhi,Delhi,\"Anand Vihar, Delhi - DPCC\",2021-01-01,None,210,12,nan\n");
  const auto t = ingest::parse_cpcb_csv({dir / "a.csv"});
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.station[0], "Anand Vihar, Delhi - DPCC");
  EXPECT_EQ(t.date[0], Date(2021, 1, 1));
  EXPECT_EQ(t.date[1], Date(2021, 1, 2));
  EXPECT_FALSE(t.at("PM2.5").cells[0]);
  EXPECT_EQ(t.at("PM2.5").cells[1], 120.5);
  EXPECT_FALSE(t.at("PM10").cells[1]);
  // Negative pollutant readings are sensor faults; negative temperatures are not.
  EXPECT_FALSE(t.at("SO2").cells[1]);
  EXPECT_EQ(t.at("Temp").cells[1], -3.5);
  EXPECT_FALSE(t.at("SO2").cells[0]);
  EXPECT_EQ(t.at("PM2.5 (ug/m3)").variable, "PM2.5");
}

TEST(Ingest, RejectsBadDatesAndDuplicates) {
  TempDir dir("ingest");
  write_text(dir / "a.csv", std::string(kHeader) +
                                "D,D,X,01-01-2021,1,2,3,4\n"
                                "D,D,X,31-02-2021,1,2,3,4\n"
                                "D,D,X,2021-01-01,9,9,9,9\n"
                                "D,D,X,02-01-2021,1,2,3,4\n");
  const auto t = ingest::parse_cpcb_csv({dir / "a.csv"});
  ASSERT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.at("PM2.5").cells[0], 1.0) << "first occurrence of a duplicate key wins";
  ASSERT_EQ(t.provenance.size(), 1u);
  EXPECT_EQ(t.provenance[0].data_lines, 4u);
  EXPECT_EQ(t.provenance[0].accepted, 2u);
  EXPECT_EQ(t.provenance[0].rejected, 2u);
}

TEST(Ingest, MergesFilesInKeyOrder) {
  TempDir dir("ingest");
  write_text(dir / "b.csv", std::string(kHeader) + "D,D,Y,01-01-2021,1,2,3,4\n");
  write_text(dir / "a.csv", std::string(kHeader) + "D,D,X,05-01-2021,5,6,7,8\nD,D,X,01-01-2021,1,1,1,1\n");
  const auto t = ingest::parse_cpcb_csv({dir / "b.csv", dir / "a.csv"});
  ASSERT_EQ(t.rows(), 3u);
  EXPECT_EQ(t.station, (std::vector<std::string>{"X", "X", "Y"}));
  EXPECT_NO_THROW(t.validate());
  EXPECT_EQ(t.provenance.size(), 2u);
}

TEST(Ingest, SchemaErrors) {
  TempDir dir("ingest");
  write_text(dir / "nodate.csv", "State,City,Station,PM2.5\nD,D,X,4\n");
  EXPECT_THROW(ingest::parse_cpcb_csv({dir / "nodate.csv"}), SchemaError);
  write_text(dir / "empty.csv", "");
  EXPECT_THROW(ingest::parse_cpcb_csv({dir / "empty.csv"}), DataError);
  EXPECT_THROW(ingest::parse_cpcb_csv({dir / "absent.csv"}), DataError);
  EXPECT_THROW(ingest::parse_cpcb_csv({}), DataError);
}

TEST(Ingest, UnknownColumnsAreKept) {
  TempDir dir("ingest");
  write_text(dir / "a.csv", "State,City,Station,Date,PM2.5 (ug/m3),Mystery\nD,D,X,01-01-2021,3,7\n");
  const auto t = ingest::parse_cpcb_csv({dir / "a.csv"});
  ASSERT_NE(t.find("Mystery"), nullptr);
  EXPECT_EQ(t.at("Mystery").cells[0], 7.0);
  EXPECT_FALSE(t.provenance[0].notes.empty());
}

TEST(Ingest, CanonicalRoundTrip) {
  TempDir dir("ingest");
  write_text(dir / "a.csv", std::string(kHeader) +
                                "Delhi,Delhi,\"Anand Vihar, Delhi - DPCC\",02-01-2021,120.5,NA,-3.5,0.1\n"
                                "Delhi,Delhi,ITO,01-01-2021,1e-3,210,12,\n");
  const auto t = ingest::parse_cpcb_csv({dir / "a.csv"});
  ingest::write_csv(t, dir / "canon.csv");
  const auto back = ingest::read_canonical_csv(dir / "canon.csv");
  ASSERT_EQ(back.rows(), t.rows());
  EXPECT_EQ(back.station, t.station);
  EXPECT_EQ(back.date, t.date);
  ASSERT_EQ(back.numeric.size(), t.numeric.size());
  for (std::size_t c = 0; c < t.numeric.size(); ++c) {
    EXPECT_EQ(back.numeric[c].name, t.numeric[c].name);
    EXPECT_EQ(back.numeric[c].cells, t.numeric[c].cells);
  }
  EXPECT_EQ(ingest::to_csv(back), ingest::to_csv(t));
}

TEST(Ingest, SchemaConfigRoundTrip) {
  const auto schema = ingest::SchemaConfig::cpcb_default();
  const auto back = ingest::SchemaConfig::from_json(schema.to_json());
  EXPECT_EQ(back.to_json(), schema.to_json());
  ASSERT_NE(schema.find_header("Temp (degree C)"), nullptr);
  EXPECT_FALSE(schema.find_header("Temp (degree C)")->nonnegative);
  EXPECT_THROW(ingest::SchemaConfig::from_json(nlohmann::json{{"numeric", 3}}), ConfigError);
}

TEST(Ingest, MonthlyGapReportFlagsFullOutage) {
  DataTable t;
  std::vector<Cell> nh3;
  for (int d = 1; d <= 31; ++d) {
    t.add_row("M", "Mumbai", "Bandra", Date(2021, 3, static_cast<unsigned>(d)));
    nh3.push_back(std::nullopt);
  }
  t.add_row("M", "Mumbai", "Bandra", Date(2021, 4, 1));
  nh3.push_back(5.0);
  t.numeric.push_back(testutil::column("NH3", nh3));
  const auto gaps = ingest::monthly_gap_report(t);
  ASSERT_EQ(gaps.size(), 1u);
  EXPECT_EQ(gaps[0].month, 3u);
  EXPECT_EQ(gaps[0].missing_count, 31u);
  EXPECT_TRUE(gaps[0].month_fully_missing);
}
