#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tadkit/csv.hpp"
#include "tadkit/rng.hpp"

using namespace tadkit;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
  }
  ~TempFile() { std::remove(path.c_str()); }
  void write(const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
};

}  // namespace

TEST_CASE("labels default to zero when the column is absent") {
  TempFile f("tadkit_csv_nolabel.csv");
  f.write("timestamp,v\n0,1.0\n1,2.0\n2,3.0\n");
  const auto s = load_csv(f.path);
  REQUIRE(s.n_points() == 3);
  CHECK(s.labels == std::vector<std::uint8_t>{0, 0, 0});
  CHECK(s.at(2, 0) == 3.0);
}

TEST_CASE("value gaps forward-fill, leading gaps back-fill") {
  TempFile f("tadkit_csv_gap.csv");
  f.write("timestamp,v\n0,1.5\n1,\n2,3.0\n");
  const auto s = load_csv(f.path);
  CHECK(s.at(1, 0) == 1.5);

  TempFile g("tadkit_csv_leading_gap.csv");
  g.write("timestamp,v\n0,\n1,\n2,9.0\n3,4.0\n");
  const auto t = load_csv(g.path);
  CHECK(t.at(0, 0) == 9.0);
  CHECK(t.at(1, 0) == 9.0);
}

TEST_CASE("duplicate timestamps are rejected with the line number") {
  TempFile f("tadkit_csv_dup.csv");
  f.write("timestamp,v\n4,1\n5,2\n5,3\n6,4\n");
  try {
    load_csv(f.path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("rows sort by timestamp on load") {
  TempFile f("tadkit_csv_unsorted.csv");
  f.write("timestamp,v,label\n2,30,0\n0,10,1\n1,20,0\n");
  const auto s = load_csv(f.path);
  CHECK(s.timestamps == std::vector<double>{0, 1, 2});
  CHECK(s.at(0, 0) == 10.0);
  CHECK(s.labels[0] == 1);
}

TEST_CASE("malformed cells report the line") {
  TempFile f("tadkit_csv_bad.csv");
  f.write("timestamp,v\n0,1.0\n1,oops\n");
  try {
    load_csv(f.path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  TempFile g("tadkit_csv_short_row.csv");
  g.write("timestamp,a,b\n0,1,2\n1,3\n");
  CHECK_THROWS_AS(load_csv(g.path), Error);
}

TEST_CASE("empty files are rejected") {
  TempFile f("tadkit_csv_empty.csv");
  f.write("");
  CHECK_THROWS_AS(load_csv(f.path), Error);
  TempFile g("tadkit_csv_header_only.csv");
  g.write("timestamp,v\n");
  CHECK_THROWS_AS(load_csv(g.path), Error);
}

TEST_CASE("csv round-trip is lossless") {
  Rng rng(31);
  TimeSeries s;
  s.channel_names = {"a", "b"};
  for (int i = 0; i < 300; ++i) {
    s.timestamps.push_back(i * 0.1);
    s.values.push_back(rng.gaussian() * 1e3);
    s.values.push_back(rng.uniform(-1, 1));
    s.labels.push_back(rng.below(10) == 0 ? 1 : 0);
  }
  TempFile f("tadkit_csv_roundtrip.csv");
  save_csv(s, f.path);
  const auto back = load_csv(f.path);
  REQUIRE(back.n_points() == s.n_points());
  CHECK(back.channel_names == s.channel_names);
  CHECK(back.timestamps == s.timestamps);
  CHECK(back.values == s.values);
  CHECK(back.labels == s.labels);
}
