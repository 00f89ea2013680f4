#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace {

using Json = nlohmann::json;

struct Invocation {
  int code = -1;
  std::string out;
};

Invocation run(const std::string& args) {
  const std::string cmd = std::string(CONEMORSE_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  Invocation r;
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data(const std::string& name) { return std::string(DATA_DIR) + "/" + name; }

std::string temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / ("conemorse_cli_" + name);
  std::ofstream(path) << contents;
  return path.string();
}

std::vector<long long> rhs_of(const Json& report, const std::string& check) {
  std::vector<long long> out;
  for (const auto& c : report["checks"]) {
    if (c["check"] == check) out.push_back(c["rhs"].get<long long>());
  }
  return out;
}

const char* kSphereHead = R"({"dimension": 2, "psi_degree": 2, "psi_closed": true,
  "critical_points": [{"id": "a", "index": 0}, {"id": "b", "index": 1}, {"id": "c", "index": 2}],)";

TEST(Cli, FamilySAtZero) {
  const Invocation r = run("s2-example --family s --param 0");
  ASSERT_EQ(r.code, 0);
  const Json rep = Json::parse(r.out)["report"];
  EXPECT_EQ(rep["v"][0], 0);
  EXPECT_EQ(rep["b_psi"], Json::parse("[1,1,1,1]"));
  EXPECT_EQ(rhs_of(rep, "weak_cone_morse"), (std::vector<long long>{2, 4, 4, 2}));
}

TEST(Cli, FamilyT) {
  const Invocation r = run("s2-example --family t --param 0.2");
  ASSERT_EQ(r.code, 0);
  const Json rep = Json::parse(r.out)["report"];
  EXPECT_EQ(rep["v"][0], 2);
  const auto weak = rhs_of(rep, "weak_cone_morse");
  EXPECT_EQ(weak[1], 2);
  EXPECT_EQ(weak[2], 2);
}

TEST(Cli, PerfectFamilyHasZeroSlack) {
  const Invocation r = run("s2-example --family perfect");
  ASSERT_EQ(r.code, 0);
  const Json rep = Json::parse(r.out)["report"];
  EXPECT_TRUE(rep["perfect"].get<bool>());
  for (const auto& c : rep["checks"]) {
    const std::string name = c["check"];
    if (name.find("cone_morse") != std::string::npos || name.find("perfect") == 0) {
      EXPECT_EQ(c["slack"], 0) << name;
    }
  }
}

TEST(Cli, NumericAndBothModes) {
  const Invocation r = run("s2-example --family t --param 0.3 --mode both --grid 64x128");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_TRUE(j["c_psi"]["agree_within_1pct"].get<bool>());
  EXPECT_EQ(j["report"]["v"][0], 2);
  EXPECT_EQ(j["regions"].size(), 4u);
}

TEST(Cli, ExactAlphaReportsFactorization) {
  const Invocation r = run("s2-example --family exact-alpha");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  const auto& f = j["factorization"];
  EXPECT_NEAR(f["determinant"].get<double>(), f["product"].get<double>(), 1e-12);
  EXPECT_EQ(j["report"]["v"][0], 2);
  bool found = false;
  for (const auto& c : j["report"]["checks"]) {
    if (c["check"] == "exact_two_form_betti_bound" && c["degree"] == 1) {
      found = true;
      EXPECT_EQ(c["rhs"], 0);
      EXPECT_TRUE(c["holds"].get<bool>());
    }
  }
  EXPECT_TRUE(found);
}

TEST(Cli, MetricEpsNeedsNumericMode) {
  EXPECT_EQ(run("s2-example --family metric-eps").code, 2);
}

TEST(Cli, BadArguments) {
  EXPECT_EQ(run("s2-example --family q").code, 2);
  EXPECT_EQ(run("s2-example --grid 3by4").code, 2);
  EXPECT_EQ(run("s2-example --step -1").code, 2);
  EXPECT_EQ(run("randcheck").code, 2);
  EXPECT_EQ(run("").code, 2);
}

TEST(Cli, BundledDataset) {
  const Invocation r = run("morse-report " + data("s2_six_point.json"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(rhs_of(Json::parse(r.out), "weak_cone_morse"), (std::vector<long long>{2, 3, 3, 2}));
  const Invocation csv = run("morse-report " + data("s2_six_point.json") + " --format csv");
  EXPECT_EQ(csv.out.rfind("check,degree,lhs,relation,rhs,slack,holds\n", 0), 0u);
}

TEST(Cli, EveryBundledDatasetHolds) {
  for (const char* f : {"s2_six_point.json", "s2_psi_t.json", "s2_height_perfect.json", "empty.json"}) {
    const Invocation r = run("morse-report " + data(f));
    EXPECT_EQ(r.code, 0) << f;
    EXPECT_TRUE(Json::parse(r.out)["all_hold"].get<bool>()) << f;
  }
}

TEST(Cli, EmptyManifold) {
  const Invocation r = run("morse-report " + data("empty.json"));
  ASSERT_EQ(r.code, 0);
  const Json rep = Json::parse(r.out);
  for (const auto& v : rep["m"]) EXPECT_EQ(v, 0);
  for (const auto& v : rep["b_psi"]) EXPECT_EQ(v, 0);
}

TEST(Cli, SchemaErrors) {
  EXPECT_EQ(run("morse-report " + data("invalid_index_gap.json")).code, 2);
  EXPECT_EQ(run("morse-report /nonexistent/file.json").code, 2);
  EXPECT_EQ(run("morse-report " + temp_file("garbage.json", "{\"dimension\": ")).code, 2);
  EXPECT_EQ(run("morse-report " + temp_file("extra.json", std::string(kSphereHead) +
                                                             R"("flow_counts": [], "psi_integrals": [], "colour": 1})"))
                .code,
            2);
  EXPECT_EQ(run("morse-report " + temp_file("float_n.json", std::string(kSphereHead) +
                                                               R"("flow_counts": [{"from": "b", "to": "a", "n": 1.5}], "psi_integrals": []})"))
                .code,
            2);
}

TEST(Cli, BoundaryNotSquareZero) {
  const std::string text = R"({"dimension": 2, "psi_degree": 2, "psi_closed": true,
    "critical_points": [{"id": "a", "index": 0}, {"id": "b", "index": 1}, {"id": "c", "index": 2}],
    "flow_counts": [{"from": "b", "to": "a", "n": 1}, {"from": "c", "to": "b", "n": 1}],
    "psi_integrals": []})";
  EXPECT_EQ(run("morse-report " + temp_file("dd.json", text)).code, 2);
}

TEST(Cli, InconsistentDeRhamDataIsANumericalFailure) {
  // One generator per degree; b_1 = 3 exceeds m_1 = 1, which
  // breaks the Morse inequalities.
  const std::string text = std::string(kSphereHead) +
                           R"("flow_counts": [], "psi_integrals": [],
    "de_rham": {"betti": [1, 3, 1], "psi_ranks": [0]}})";
  const Invocation r = run("morse-report " + temp_file("bad_betti.json", text));
  EXPECT_EQ(r.code, 3);
  EXPECT_FALSE(Json::parse(r.out)["all_hold"].get<bool>());
}

TEST(Cli, RandcheckEmpty) {
  const Invocation r = run("randcheck --trials 0 --seed 1");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["passed"], 0);
  EXPECT_EQ(j["failed"], 0);
}

TEST(Cli, RandcheckHundredPasses) {
  const Invocation r = run("randcheck --trials 100 --seed 42");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["passed"], 100);
  EXPECT_TRUE(j["failing_seeds"].empty());
}

TEST(Cli, ByteIdenticalOutputs) {
  for (const char* args : {"randcheck --trials 20 --seed 7", "s2-example --family t --param 0.2",
                           "s2-example --family s --param 0.1 --mode numeric --grid 32x64",
                           "morse-report DATA --format csv"}) {
    std::string a = args;
    if (const auto p = a.find("DATA"); p != std::string::npos) a.replace(p, 4, data("s2_psi_t.json"));
    const Invocation x = run(a), y = run(a);
    EXPECT_EQ(x.code, 0) << a;
    EXPECT_EQ(x.out, y.out) << a;
    EXPECT_FALSE(x.out.empty()) << a;
  }
}

TEST(Cli, OutAndModuliCsvFiles) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto out = (dir / "conemorse_cli_out.json").string();
  const auto csv = (dir / "conemorse_cli_moduli.csv").string();
  const Invocation r = run("s2-example --family s --param 0.3 --mode numeric --grid 16x32 --out " + out +
                    " --moduli-csv " + csv);
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  std::ifstream j(out), c(csv);
  EXPECT_NO_THROW(Json::parse(j));
  std::string header;
  std::getline(c, header);
  EXPECT_EQ(header, "i,j,phi,theta,backward,forward,separatrix");
}

}  // namespace
