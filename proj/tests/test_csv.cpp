#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "lpsr/csv.hpp"
#include "testutil.hpp"

using namespace lpsr;
namespace fs = std::filesystem;

namespace {
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("lpsr_csv_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static inline int counter = 0;
};
}  // namespace

TEST_CASE("profile CSV round-trips losslessly") {
  TempDir dir;
  Rng rng(3);
  std::vector<LoadProfile> profiles;
  for (int h = 0; h < 2; ++h) {
    for (int d = 0; d < 3; ++d) {
      LoadProfile p;
      p.household_id = "h" + std::to_string(h);
      p.day = d;
      p.period_min = 5;
      p.values_kw = test::rand_vec(rng, 288, 0.0, 9.0);
      profiles.push_back(std::move(p));
    }
  }
  const auto path = dir.file("profiles.csv");
  save_profiles_csv(path, profiles);
  const auto loaded = load_profiles_csv(path);
  REQUIRE(loaded.profiles.size() == profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    REQUIRE(loaded.profiles[i].household_id == profiles[i].household_id);
    REQUIRE(loaded.profiles[i].day == profiles[i].day);
    REQUIRE(loaded.profiles[i].period_min == profiles[i].period_min);
    REQUIRE(loaded.profiles[i].values_kw == profiles[i].values_kw);  // bit-exact
  }
}

TEST_CASE("a row with a missing interval is rejected with its row number") {
  TempDir dir;
  const auto path = dir.file("gap.csv");
  {
    std::ofstream f(path);
    f << "household_id,day,period_min,t0,t1,t2\n";
    f << "h0,0,480,1.0,2.0,3.0\n";
    f << "h0,1,480,1.0,2.0\n";  // short row
  }
  try {
    load_profiles_csv(path);
    FAIL("expected a gap error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("row 3") != std::string::npos);
    REQUIRE(msg.find("gap") != std::string::npos);
  }
}

TEST_CASE("an empty cell is rejected with row and column") {
  TempDir dir;
  const auto path = dir.file("empty_cell.csv");
  {
    std::ofstream f(path);
    f << "household_id,day,period_min,t0,t1,t2\n";
    f << "h0,0,480,1.0,,3.0\n";
  }
  try {
    load_profiles_csv(path);
    FAIL("expected an invalid value error");
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("non-monotonic days for one household are rejected") {
  TempDir dir;
  const auto path = dir.file("order.csv");
  {
    std::ofstream f(path);
    f << "household_id,day,period_min,t0,t1,t2\n";
    f << "h0,5,480,1.0,2.0,3.0\n";
    f << "h0,4,480,1.0,2.0,3.0\n";
  }
  try {
    load_profiles_csv(path);
    FAIL("expected a non-monotonic error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    REQUIRE(msg.find("non-monotonic") != std::string::npos);
    REQUIRE(msg.find("row 3") != std::string::npos);
  }
}

TEST_CASE("ingest-time downsampling equals the block-mean downsampler") {
  TempDir dir;
  Rng rng(9);
  LoadProfile fine;
  fine.household_id = "h0";
  fine.day = 0;
  fine.period_min = 1;
  fine.values_kw = test::rand_vec(rng, 1440, 0.0, 4.0);
  const auto path = dir.file("minute.csv");
  save_profiles_csv(path, {fine});

  const auto loaded = load_profiles_csv(path, 5);
  REQUIRE(loaded.profiles.size() == 1);
  Rng noiseless(0);
  const auto oracle = downsample(fine, 5, 0.0, noiseless);
  REQUIRE(loaded.profiles[0].period_min == 5);
  REQUIRE(loaded.profiles[0].values_kw.size() == oracle.values_kw.size());
  for (std::size_t i = 0; i < oracle.values_kw.size(); ++i) {
    REQUIRE(loaded.profiles[0].values_kw[i] == Catch::Approx(oracle.values_kw[i]).margin(1e-12));
  }
}

TEST_CASE("days with extreme peaks are flagged, not dropped") {
  TempDir dir;
  std::vector<LoadProfile> profiles;
  for (int d = 0; d < 5; ++d) {
    LoadProfile p;
    p.household_id = "h0";
    p.day = d;
    p.period_min = 30;
    p.values_kw = std::vector<double>(48, 1.0);
    if (d == 3) p.values_kw[10] = 500.0;  // absurd spike
    profiles.push_back(std::move(p));
  }
  const auto path = dir.file("spiky.csv");
  save_profiles_csv(path, profiles);
  const auto loaded = load_profiles_csv(path);
  REQUIRE(loaded.profiles.size() == 5);
  REQUIRE(loaded.flagged == std::vector<std::size_t>{3});
}

TEST_CASE("weather CSV round-trips by day and channel") {
  TempDir dir;
  Rng rng(4);
  std::vector<WeatherTrack> tracks;
  for (int d = 0; d < 3; ++d) {
    WeatherTrack t;
    t.day = d;
    t.period_min = 60;
    t.names = {"temperature", "humidity", kDaylightChannel};
    for (int c = 0; c < 3; ++c) t.channels.push_back(test::rand_vec(rng, 25, 0.0, 30.0));
    tracks.push_back(std::move(t));
  }
  const auto path = dir.file("weather.csv");
  save_weather_csv(path, tracks);
  const auto loaded = load_weather_csv(path);
  REQUIRE(loaded.size() == 3);
  for (std::size_t d = 0; d < 3; ++d) {
    REQUIRE(loaded[d].day == tracks[d].day);
    REQUIRE(loaded[d].names == tracks[d].names);
    REQUIRE(loaded[d].channels == tracks[d].channels);
  }
}
