// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>

#include "phasemo/cfr_io.hpp"
#include "phasemo/simulation.hpp"

namespace {

using namespace phasemo;
using config::ScenarioConfig;
using precoding::ArchitectureKind;
namespace fs = std::filesystem;

const std::string kSim = PHASEMO_SIM_PATH;
const std::string kConfigs = PHASEMO_CONFIG_DIR;

std::string field_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.field();
  }
  ADD_FAILURE() << "no ConfigError";
  return {};
}

ScenarioConfig parse(const std::string& text, const std::vector<std::string>& overrides = {}) {
  std::istringstream in(text);
  return config::parse_ini(in, overrides);
}

const char* kSmall =
    "[scenario]\n"
    "architectures = Digital,PhaseMO\n"
    "antennas = 16\n"
    "users = 2\n"
    "chains = 4\n"
    "subcarriers = 16\n"
    "ofdm_symbols = 2\n"
    "repetitions = 3\n"
    "seed = 9\n";

std::vector<std::string> small_overrides() {
  return {"scenario.antennas=16", "scenario.users=2",        "scenario.chains=4",
          "scenario.subcarriers=16", "scenario.ofdm_symbols=2", "scenario.repetitions=2"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class TempDir {
 public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / ("phasemo_test_" + std::string(info->name()) + "_" +
                                         std::to_string(::getpid()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

int cli(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kSim + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string sets(const std::vector<std::string>& overrides) {
  std::string out;
  for (const auto& o : overrides) out += " --set " + o;
  return out;
}

std::string csv_of(const ScenarioConfig& cfg, const std::vector<sim::ResultRow>& rows) {
  std::ostringstream out;
  sim::write_csv(out, cfg, "test", rows);
  return out.str();
}

TEST(Config, ParsesSectionsCommentsAndOverrides) {
  const auto cfg = parse(std::string(kSmall) +
                             "[channel]\n"
                             "distance_m = 150   # metres\n"
                             "; whole-line comment\n"
                             "[power]\n"
                             "antenna_power_mode = fixed\n"
                             "[frontend]\n"
                             "muting_policy = random\n",
                         {"scenario.seed=42", "link.noise_dbm = -90"});
  EXPECT_EQ(cfg.antennas, 16u);
  EXPECT_EQ(cfg.chains, 4u);
  EXPECT_EQ(cfg.architectures, (std::vector<ArchitectureKind>{ArchitectureKind::Digital, ArchitectureKind::PhaseMO}));
  EXPECT_EQ(cfg.distance_m, 150.0);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.noise_dbm, -90.0);
  EXPECT_EQ(cfg.power.antenna_power_mode, link::AntennaPowerMode::FixedPerAntenna);
  EXPECT_EQ(cfg.muting_policy, precoding::MutingPolicy::Random);
}

TEST(Config, DefaultsMatchShippedDefaultFile) {
  const auto file = config::load_ini(kConfigs + "/default.ini");
  ScenarioConfig defaults;
  defaults.architectures = file.architectures;
  EXPECT_EQ(config::canonical(file), config::canonical(defaults));
  EXPECT_EQ(file.power.antenna_power_mode, link::AntennaPowerMode::CapLimited);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_EQ(field_of([] { parse(kSmall, {"scenario.users=5"}); }), "scenario.users");
  EXPECT_EQ(field_of([] { parse(kSmall, {"scenario.bogus=1"}); }), "scenario.bogus");
  EXPECT_EQ(field_of([] { parse(kSmall, {"scenario.antennas=abc"}); }), "scenario.antennas");
  EXPECT_EQ(field_of([] { parse(kSmall, {"scenario.architectures=Digital,Warp"}); }), "scenario.architectures");
  EXPECT_EQ(field_of([] { parse(kSmall, {"scenario.architectures=Analog"}); }), "scenario.users");
  EXPECT_EQ(field_of([] { parse(kSmall, {"scenario.modulation_order=32"}); }), "scenario.modulation_order");
  EXPECT_EQ(field_of([] { parse(kSmall, {"power.pa_efficiency=0"}); }), "power.pa_efficiency");
  EXPECT_EQ(field_of([] { parse(kSmall, {"channel.source=file"}); }), "channel.cfr_path");
  EXPECT_EQ(field_of([] { parse("antennas = 4\n"); }), "antennas");
  EXPECT_EQ(field_of([] { config::load_ini("/nonexistent.ini"); }), "--config");
}

TEST(Config, HashTracksContent) {
  const auto a = parse(kSmall);
  const auto b = parse(kSmall);
  EXPECT_EQ(config::config_hash(a), config::config_hash(b));
  EXPECT_EQ(config::config_hash(a).size(), 16u);
  EXPECT_NE(config::config_hash(a), config::config_hash(parse(kSmall, {"scenario.seed=10"})));
  EXPECT_EQ(config::fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(config::fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Run, NoiselessDigitalReachesTopMcs) {
  const auto cfg = parse(kSmall, {"scenario.architectures=Digital", "link.noiseless=true"});
  const auto rows = sim::run(cfg);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_DOUBLE_EQ(r.link.sum_se(), 2 * link::default_mcs_table().max_efficiency());
    for (double s : r.link.per_user_sinr_db) EXPECT_EQ(s, cfg.sinr_cap_db);
  }
}

TEST(Run, RowOrderAndAccounting) {
  const auto cfg = parse(kSmall);
  const auto rows = sim::run(cfg);
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].repetition, i / 2);
    EXPECT_EQ(rows[i].architecture, i % 2 ? ArchitectureKind::PhaseMO : ArchitectureKind::Digital);
    EXPECT_NEAR(rows[i].eirp_dbm, 77.0, 1e-9);
  }
  EXPECT_EQ(rows[0].baseband_chains, 16u);
  EXPECT_EQ(rows[1].baseband_chains, 4u);
  EXPECT_EQ(rows[1].active_antennas, 16u);
  EXPECT_DOUBLE_EQ(rows[1].power.baseband_power_w, 4 * 1.683);
}

TEST(Run, DeterministicAcrossCallsAndThreadCounts) {
  const std::vector<std::string> far{"channel.distance_m=3000", "channel.pathloss_exponent=3.5"};
  const auto cfg = parse(kSmall, far);
  ::setenv("PHASEMO_THREADS", "1", 1);
  EXPECT_EQ(sim::worker_count(), 1u);
  const std::string one = csv_of(cfg, sim::run(cfg));
  ::setenv("PHASEMO_THREADS", "3", 1);
  const std::string three = csv_of(cfg, sim::run(cfg));
  ::unsetenv("PHASEMO_THREADS");
  EXPECT_EQ(one, three);
  EXPECT_EQ(one, csv_of(cfg, sim::run(cfg)));
  auto reseeded = far;
  reseeded.push_back("scenario.seed=10");
  const auto other = parse(kSmall, reseeded);
  const auto a = sim::run(cfg);
  const auto b = sim::run(other);
  EXPECT_NE(a[0].link.per_user_sinr_db, b[0].link.per_user_sinr_db);
  EXPECT_LT(a[0].link.mean_sinr_db(), 40.0);
}

TEST(Workers, ParallelForCoversEveryIndexAndRethrowsLowest) {
  std::vector<int> hits(200, 0);
  sim::parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; }, 4);
  EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 200);
  try {
    sim::parallel_for(
        50,
        [](std::size_t i) {
          if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
        },
        4);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}

TEST(Run, CsvLayout) {
  const auto cfg = parse(kSmall);
  std::istringstream csv(csv_of(cfg, sim::run(cfg)));
  std::string line;
  std::size_t meta = 0;
  std::size_t data = 0;
  bool header = false;
  while (std::getline(csv, line)) {
    if (line.rfind('#', 0) == 0) {
      ++meta;
      EXPECT_FALSE(header);
      continue;
    }
    if (!header) {
      EXPECT_EQ(line, sim::kCsvColumns);
      header = true;
      continue;
    }
    ++data;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 17) << line;
  }
  EXPECT_GT(meta, 5u);
  EXPECT_EQ(data, 6u);
  EXPECT_NE(csv.str().find("# config_hash: fnv1a64:" + config::config_hash(cfg)), std::string::npos);
}

TEST(Sweep, VirtualChainsSingleUser) {
  const auto cfg = parse(kSmall, {"scenario.users=1", "scenario.architectures=PhaseMO"});
  const auto rows = sim::sweep(cfg, "V", {"1", "2", "4", "8"});
  ASSERT_EQ(rows.size(), 12u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].point, i / 3);
    EXPECT_EQ(rows[i].param, "V");
    EXPECT_EQ(rows[i].baseband_chains, std::size_t{1} << (i / 3));
  }
}

TEST(Sweep, RejectsBadPoints) {
  const auto cfg = parse(kSmall);
  EXPECT_EQ(field_of([&] { sim::sweep(cfg, "V", {"4", "1"}); }), "scenario.users");
  EXPECT_EQ(field_of([&] { sim::sweep(cfg, "warp", {"1"}); }), "--param");
  EXPECT_EQ(field_of([&] { sim::sweep(cfg, "V", {}); }), "--values");
  EXPECT_EQ(sim::sweep_key("link.noise_dbm"), "link.noise_dbm");
}

TEST(Sweep, SinrFallsWithDistance) {
  const auto cfg = parse(kSmall, {"scenario.architectures=Digital", "channel.pathloss_exponent=3.5",
                                  "channel.rician_k_db=30", "scenario.repetitions=4"});
  const auto rows = sim::sweep(cfg, "distance", {"200", "800", "3200"});
  std::vector<double> mean(3, 0.0);
  for (const auto& r : rows) mean[r.point] += r.link.mean_sinr_db() / 4.0;
  EXPECT_GE(mean[0], mean[1]);
  EXPECT_GT(mean[1], mean[2]);
  EXPECT_GT(mean[0], mean[2] + 10.0);
}

TEST(Run, FileChannelMatchesSyntheticDrop) {
  TempDir dir;
  const auto cfg = parse(kSmall, {"scenario.architectures=Digital", "scenario.repetitions=1"});
  const auto h = channel::synthesize_channel(cfg.geometry(sim::drop_seed(cfg, 0)));
  channel::save_cfr(h, (dir / "drop.cfr").string());
  const auto from_file =
      parse(kSmall, {"scenario.architectures=Digital", "scenario.repetitions=1", "channel.source=file",
                     "channel.cfr_path=" + (dir / "drop.cfr").string()});
  const auto a = sim::run(cfg);
  const auto b = sim::run(from_file);
  EXPECT_EQ(a[0].link.per_user_sinr_db, b[0].link.per_user_sinr_db);
  EXPECT_EQ(a[0].power.total_w, b[0].power.total_w);
  EXPECT_EQ(field_of([&] { sim::run(parse(kSmall, {"scenario.antennas=8", "channel.source=file",
                                                   "channel.cfr_path=" + (dir / "drop.cfr").string()})); }),
            "channel.cfr_path");
}

TEST(Oracle, ShippedConfigPasses) {
  auto cfg = config::load_ini(kConfigs + "/oracle.ini", {"scenario.repetitions=2"});
  const auto report = sim::oracle_check(cfg);
  ASSERT_EQ(report.trials.size(), 2u);
  EXPECT_TRUE(report.pass());
  EXPECT_LT(report.max_error(), 1e-9);
  EXPECT_LT(report.max_oob_db(), -120.0);
}

TEST(Oracle, SingleChainAndMissingPrecompensation) {
  const auto single = config::load_ini(kConfigs + "/oracle.ini",
                                       {"scenario.repetitions=1", "scenario.users=1", "scenario.chains=1"});
  EXPECT_LT(sim::oracle_check(single).max_error(), 1e-9);
  const auto raw = config::load_ini(kConfigs + "/oracle.ini", {"scenario.repetitions=1", "frontend.precompensate=false"});
  const auto report = sim::oracle_check(raw);
  EXPECT_FALSE(report.pass());
  EXPECT_GT(report.max_error(), sim::kOracleErrorThreshold);
  EXPECT_EQ(field_of([] { sim::oracle_check(config::load_ini(kConfigs + "/default.ini")); }),
            "scenario.architectures");
}

TEST(Cli, RunIsByteReproducible) {
  TempDir dir;
  const std::string base = "run --config '" + kConfigs + "/default.ini'" + sets(small_overrides());
  ASSERT_EQ(cli(base + " --out '" + (dir / "a.csv").string() + "'"), 0);
  ASSERT_EQ(cli(base + " --out '" + (dir / "b.csv").string() + "'", "PHASEMO_THREADS=2"), 0);
  const std::string a = slurp(dir / "a.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  EXPECT_EQ(a.rfind("# phasemo-sim", 0), 0u);
}

TEST(Cli, SweepWritesEveryPoint) {
  TempDir dir;
  ASSERT_EQ(cli("sweep --config '" + kConfigs + "/default.ini'" + sets(small_overrides()) +
                " --param V --values 2,4 --out '" + (dir / "s.csv").string() + "'"),
            0);
  std::istringstream csv(slurp(dir / "s.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line))
    if (!line.empty() && line[0] != '#' && line.rfind("point,", 0) != 0) ++rows;
  EXPECT_EQ(rows, 2u * 2u * 3u);
}

TEST(Cli, ExitCodes) {
  const std::string cfg = " --config '" + kConfigs + "/default.ini'";
  EXPECT_EQ(cli("run" + cfg + " --set scenario.users=9 --out /dev/null"), 1);
  EXPECT_EQ(cli("run" + cfg + " --set scenario.nope=1 --out /dev/null"), 1);
  EXPECT_EQ(cli("run --config /nonexistent.ini"), 1);
  EXPECT_EQ(cli("frobnicate"), 1);
  EXPECT_EQ(cli("sweep" + cfg + " --param nope --values 1 --out /dev/null"), 1);
  const std::string oracle = " --config '" + kConfigs + "/oracle.ini' --set scenario.repetitions=1";
  EXPECT_EQ(cli("oracle-check" + oracle), 0);
  EXPECT_EQ(cli("oracle-check" + oracle + " --set frontend.precompensate=false"), 2);
  EXPECT_EQ(cli("--version"), 0);
}

TEST(Cli, CfrSynthInspectConvert) {
  TempDir dir;
  const std::string cfr = (dir / "h.cfr").string();
  ASSERT_EQ(cli("cfr synth --config '" + kConfigs + "/oracle.ini' --repetition 1 --out '" + cfr + "'"), 0);
  EXPECT_EQ(cli("cfr inspect '" + cfr + "'"), 0);
  ASSERT_EQ(cli("cfr convert '" + cfr + "' '" + (dir / "h.csv").string() + "'"), 0);
  const auto original = channel::load_cfr(cfr);
  ASSERT_EQ(cli("cfr convert '" + (dir / "h.csv").string() + "' '" + (dir / "back.cfr").string() +
                "' --center-hz " + config::detail::format_double(original.center_frequency_hz()) + " --spacing-hz " +
                config::detail::format_double(original.subcarrier_spacing_hz())),
            0);
  const auto back = channel::load_cfr((dir / "back.cfr").string());
  ASSERT_EQ(back.entries().size(), original.entries().size());
  EXPECT_TRUE(std::equal(back.entries().begin(), back.entries().end(), original.entries().begin()));
  EXPECT_EQ(back.subcarrier_spacing_hz(), original.subcarrier_spacing_hz());

  const auto cfg = config::load_ini(kConfigs + "/oracle.ini");
  const auto expected = channel::synthesize_channel(cfg.geometry(sim::drop_seed(cfg, 1)));
  EXPECT_TRUE(std::equal(expected.entries().begin(), expected.entries().end(), original.entries().begin()));
  EXPECT_EQ(cli("cfr inspect '" + (dir / "missing.cfr").string() + "'"), 1);
}

}  // namespace
