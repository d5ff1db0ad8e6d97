#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fraclab/experiment.hpp"

using namespace fraclab;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "schema_version": 1,
  "name": "small",
  "domain": {"kind": "interval", "R": 1.0},
  "alpha": 0.5,
  "potential": {"kind": "hardy_interior", "c_over_cstar": 0.5},
  "h_schedule": [0.0625, 0.03125, 0.015625],
  "k_schedule": [1, 4, "inf"],
  "dt": 0.02,
  "t_final": 0.2,
  "shrinking_ball": {"radii": [1.0, 0.5, 0.25], "nodes_per_diameter": 32},
  "certificates": {"log_trials": 3, "energy_trials": 3},
  "state_checkpoints": [0.1],
  "seed": 4
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool mentions(const std::vector<std::string>& errors, const std::string& field) {
  for (const auto& e : errors)
    if (e.rfind(field + ":", 0) == 0 || e.rfind(field + "[", 0) == 0) return true;
  return false;
}

std::string with(const std::string& key_value_to_replace, const std::string& replacement) {
  std::string s = kSmall;
  const auto at = s.find(key_value_to_replace);
  REQUIRE(at != std::string::npos);
  return s.replace(at, key_value_to_replace.size(), replacement);
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("valid configs") {
    CHECK(validate_config_text(kSmall).empty());
    for (const char* name : {"hardy_subcritical_1d", "hardy_supercritical_1d", "bounded_1d", "hardy_disk_2d"}) {
      const auto errors = validate_config(fs::path(FRACLAB_SOURCE_DIR) / "configs" / (std::string(name) + ".json"));
      CHECK_MESSAGE(errors.empty(), name);
    }
  }

  TEST_CASE("violations name their field") {
    CHECK(mentions(validate_config_text(with("\"alpha\": 0.5", "\"alpha\": 1.5")), "alpha"));
    CHECK(mentions(validate_config_text(with("\"schema_version\": 1,", "")), "schema_version"));
    CHECK(mentions(validate_config_text(with("\"schema_version\": 1", "\"schema_version\": 2")), "schema_version"));
    CHECK(mentions(validate_config_text(with("\"seed\": 4", "\"seed\": 4, \"colour\": 1")), "colour"));
    CHECK(mentions(validate_config_text(with("\"t_final\": 0.2", "\"t_final\": 0.21")), "t_final"));
    CHECK(mentions(validate_config_text(with("0.03125, 0.015625", "0.015625, 0.03125")), "h_schedule"));
    CHECK(mentions(validate_config_text(with("[1, 4, \"inf\"]", "[4, 1]")), "k_schedule"));
    CHECK(mentions(validate_config_text(with("\"interval\"", "\"triangle\"")), "domain.kind"));
    CHECK(mentions(validate_config_text(with("\"c_over_cstar\": 0.5", "\"c\": 1, \"c_over_cstar\": 0.5")),
                   "potential.c"));
    CHECK(mentions(validate_config_text(with("[1.0, 0.5, 0.25]", "[2.0, 0.5, 0.25]")), "shrinking_ball.radii[0]"));
    CHECK(mentions(validate_config_text("[1, 2]"), "document"));
    CHECK(mentions(validate_config_text("{"), "document"));
    CHECK(mentions(validate_config("/nonexistent/config.json"), "config"));
    // every violation is reported, not just the first
    const auto many = validate_config_text(with("\"alpha\": 0.5", "\"alpha\": 1.5, \"name\": 3"));
    CHECK(mentions(many, "alpha"));
    CHECK(many.size() >= 2);
  }

  TEST_CASE("parse_config throws ConfigError naming alpha") {
    try {
      parse_config(with("\"alpha\": 0.5", "\"alpha\": 1.5"));
      FAIL("expected ConfigError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigError);
      CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
  }

  TEST_CASE("run writes the report files and is byte-stable") {
    const ExperimentConfig cfg = parse_config(kSmall);
    const fs::path a = fs::temp_directory_path() / "fraclab_run_a", b = fs::temp_directory_path() / "fraclab_run_b";
    fs::remove_all(a);
    fs::remove_all(b);
    RunOptions oa, ob;
    oa.output_dir = a;
    ob.output_dir = b;
    ob.threads = 3;
    const RunSummary ra = run_experiment(cfg, oa);
    run_experiment(cfg, ob);
    for (const char* f : {"report.json", "series.csv", "trajectories.csv", "curves.csv", "states.csv"}) {
      REQUIRE(fs::exists(a / f));
      CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
    }
    CHECK(slurp(a / "series.csv").rfind("h,k,epsilon,lambda0,iterations\n", 0) == 0);
    CHECK(slurp(a / "trajectories.csv").rfind("h,k,t,l2_norm,max_value\n", 0) == 0);
    CHECK(slurp(a / "curves.csv").rfind("h,lambda0,sup_norm_probe,l2_norm_probe\n", 0) == 0);
    const std::string report = slurp(a / "report.json");
    for (const char* key : {"\"schema_version\"", "\"config_digest\"", "\"verdict\"", "\"certificates\"",
                            "\"series_file\"", "\"trajectories_file\"", "\"inputs_digest\"", "\"slack\""})
      CHECK_MESSAGE(report.find(key) != std::string::npos, key);
    CHECK(ra.certificates.size() == 3 + 3 + 3 + 1 + 1);

    // a different seed changes the random certificates but not the verdict
    RunOptions oc = oa;
    oc.seed = 99;
    const RunSummary rc = run_experiment(cfg, oc);
    CHECK(rc.verdict.label == ra.verdict.label);
    CHECK(slurp(a / "report.json") != report);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("uniform source") {
    UniformSource a(1), b(1);
    for (int i = 0; i < 1000; ++i) {
      const double x = a.next();
      CHECK(x == b.next());
      CHECK(x >= 0.0);
      CHECK(x < 1.0);
    }
    std::mt19937_64 ref(1);
    CHECK(UniformSource(1).next() == static_cast<double>(ref() >> 11) * 0x1.0p-53);
  }

  TEST_CASE("random test vectors are normalised") {
    const Grid g = build_grid(DomainSpec::disk(1.0), 0.1);
    UniformSource rng(3);
    for (int i = 0; i < 20; ++i) {
      const Vector phi = random_test_vector(g, rng);
      CHECK(phi.squaredNorm() * g.cell_volume() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(phi.minCoeff() >= 0.0);
    }
  }
}
