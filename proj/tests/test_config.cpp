#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "dtower/config.hpp"

using namespace dtower;

namespace {

std::string data_file(const std::string& name) { return std::string(DTOWER_TEST_DATA) + "/" + name; }

// A throwaway INI file removed at scope exit
class TempIni {
 public:
  explicit TempIni(const std::string& body) {
    path_ = (std::filesystem::temp_directory_path() / ("dtower_cfg_" + std::to_string(counter_++) + ".ini")).string();
    std::ofstream(path_) << body;
  }
  ~TempIni() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  std::string path_;
};

std::string key_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST(ParsePotential, PresetsAreUnitBumps) {
  const auto max = parse_potential("bump");
  const auto min = parse_potential(" bump-min ");
  EXPECT_NEAR(max->value(1.0), 1.0, 1e-14);
  EXPECT_NEAR(min->value(1.0), 1.0, 1e-14);
  EXPECT_EQ(max->family(), "bump");
}

TEST(ParsePotential, FamiliesWithParameters) {
  const auto bn = parse_potential("bn:lambda=-10", "potential", 5);
  EXPECT_NEAR(bn->value(0.0), 25.0, 1e-12);
  const auto bn6 = parse_potential("bn:lambda=-10,N=6");
  EXPECT_NEAR(bn6->value(0.0), 16.0, 1e-12);
  const auto c = parse_potential("const:value=2.5");
  EXPECT_EQ(c->value(7.0), 2.5);
  const auto b = parse_potential("bump:a=0.5, b=1, c=1, w=0.25");
  EXPECT_NEAR(b->value(1.0), 1.5, 1e-14);
}

TEST(ParsePotential, ErrorsNameTheOffendingKey) {
  EXPECT_EQ(key_of([] { parse_potential(""); }), "potential");
  EXPECT_EQ(key_of([] { parse_potential("bump:a=1,b=x,c=1,w=1"); }), "potential.b");
  EXPECT_EQ(key_of([] { parse_potential("bump:a=1,b"); }), "potential");
  EXPECT_EQ(key_of([] { parse_potential("const:value=1,q=2", "potential.spec"); }), "potential.spec");
  EXPECT_EQ(key_of([] { parse_potential("nosuch:a=1"); }), "potential");
  EXPECT_EQ(key_of([] { parse_potential("table"); }), "potential");
  EXPECT_EQ(key_of([] { parse_potential("table:/nonexistent/v.csv"); }), "potential.table");
  try {
    parse_potential("bump:a=0,b=1,c=1,w=0.5,q=1");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("potential.q"), std::string::npos) << e.what();
  }
}

TEST(ParsePotential, TableFromCsvInterpolates) {
  const auto t = parse_potential("table:" + data_file("table.csv"));
  EXPECT_EQ(t->family(), "table");
  EXPECT_NEAR(t->value(1.0), 2.0, 1e-14);
  EXPECT_NEAR(t->value(0.5), 1.5, 1e-14);
  EXPECT_GT(t->value(0.75), 1.5);
  EXPECT_LT(t->value(0.75), 2.0);
}

TEST(LoadConfig, ReadsAllSections) {
  const TempIni ini(
      "[configuration]\nN = 6\nk = 12\nr = 1.5\nh = 0.1\nmu = 40\n"
      "[potential]\nfamily = bump\na = 0\nb = 1\nc = 1\nw = 0.5\n"
      "[tolerances]\nrel_tol = 1e-7\nmc_samples = 5000\nseed = 42\nthreads = 3\n"
      "[output]\npath = out.json\nformat = csv\n");
  const FileConfig cfg = load_config(ini.path());
  EXPECT_EQ(cfg.N, 6);
  EXPECT_EQ(cfg.k, 12);
  EXPECT_EQ(cfg.r, 1.5);
  EXPECT_EQ(cfg.h, 0.1);
  EXPECT_EQ(cfg.mu, 40.0);
  EXPECT_EQ(cfg.potential, "bump:a=0,b=1,c=1,w=0.5");
  EXPECT_EQ(cfg.rel_tol, 1e-7);
  EXPECT_EQ(cfg.mc_samples, 5000u);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.threads, 3u);
  EXPECT_EQ(cfg.out, "out.json");
  EXPECT_EQ(cfg.format, "csv");
  EXPECT_NO_THROW(parse_potential(*cfg.potential));
}

TEST(LoadConfig, AbsentKeysStayEmpty) {
  const TempIni ini("[configuration]\nk = 4\n");
  const FileConfig cfg = load_config(ini.path());
  EXPECT_EQ(cfg.k, 4);
  EXPECT_FALSE(cfg.N);
  EXPECT_FALSE(cfg.potential);
  EXPECT_FALSE(cfg.seed);
}

TEST(LoadConfig, SpecStringAndTableFamily) {
  const TempIni spec("[potential]\nspec = bn:lambda=-12\n");
  EXPECT_EQ(load_config(spec.path()).potential, "bn:lambda=-12");
  const TempIni table("[potential]\nfamily = table\ntable = " + data_file("table.csv") + "\n");
  EXPECT_EQ(load_config(table.path()).potential, "table:" + data_file("table.csv"));
  const TempIni missing("[potential]\nfamily = table\n");
  EXPECT_EQ(key_of([&] { load_config(missing.path()); }), "potential.table");
}

TEST(LoadConfig, ErrorsNameTheOffendingKey) {
  EXPECT_EQ(key_of([] { load_config(data_file("bad_key.ini")); }), "configuration.kk");
  const TempIni section("[solver]\nx = 1\n");
  EXPECT_EQ(key_of([&] { load_config(section.path()); }), "solver");
  const TempIni real_k("[configuration]\nk = 2.5\n");
  EXPECT_EQ(key_of([&] { load_config(real_k.path()); }), "configuration.k");
  const TempIni word("[configuration]\nmu = large\n");
  EXPECT_EQ(key_of([&] { load_config(word.path()); }), "configuration.mu");
  const TempIni neg("[tolerances]\nmc_samples = -5\n");
  EXPECT_EQ(key_of([&] { load_config(neg.path()); }), "tolerances.mc_samples");
  const TempIni seed("[tolerances]\nseed = abc\n");
  EXPECT_EQ(key_of([&] { load_config(seed.path()); }), "tolerances.seed");
  const TempIni fmt("[output]\nformat = xml\n");
  EXPECT_EQ(key_of([&] { load_config(fmt.path()); }), "output.format");
  EXPECT_EQ(key_of([] { load_config("/nonexistent/dtower.ini"); }), "config");
}
