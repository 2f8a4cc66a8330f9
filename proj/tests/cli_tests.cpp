// End-to-end checks of the command-line tool. Expects the binary path as
// argv[1] (wired by ctest).
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string g_binary;
fs::path g_work;

int run(const std::string& args) {
  const std::string cmd = g_binary + " " + args + " >" + (g_work / "stdout.txt").string() +
                          " 2>" + (g_work / "stderr.txt").string();
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string stderr_text() { return slurp(g_work / "stderr.txt"); }

}  // namespace

TEST_CASE("synth is deterministic and writes dataset, truth, and summary") {
  const fs::path a = g_work / "synth_a", b = g_work / "synth_b";
  const std::string args = " --seed 7 --students 120 --courses 30 --terms 4 --noise-features 2";
  REQUIRE(run("synth --out " + a.string() + args) == 0);
  REQUIRE(run("synth --out " + b.string() + args) == 0);
  for (const char* name : {"transcript.csv", "truth.json", "summary.csv"}) {
    CHECK(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const fs::path c = g_work / "synth_c";
  REQUIRE(run("synth --out " + c.string() + " --seed 8 --students 120 --courses 30 --terms 4 --noise-features 2") == 0);
  CHECK(slurp(a / "transcript.csv") != slurp(c / "transcript.csv"));

  // summary rows mirror the cold-start-by-term table shape
  const std::string summary = slurp(a / "summary.csv");
  CHECK(summary.find("term,termnum,dyads,ncs,css,csc,csb,cs,pct_cs") == 0);
}

TEST_CASE("synth without --out is a usage error") {
  CHECK(run("synth --seed 7") != 0);
}

TEST_CASE("evaluate on a tiny fixture: gm report matches hand computation") {
  const fs::path data = g_work / "tiny.csv";
  {
    std::ofstream out(data);
    out << "sid,cid,termnum,grade\n"
        << "s1,c1,0,4.00\n"
        << "s2,c1,0,2.00\n"
        << "s1,c2,1,3.00\n"
        << "s2,c2,1,1.00\n"
        << "s3,c1,1,4.00\n";
  }
  const fs::path out = g_work / "ev_tiny";
  REQUIRE(run("evaluate --data " + data.string() + " --out " + out.string() +
              " --seed 3 --models gm") == 0);
  const auto report = nlohmann::json::parse(slurp(out / "report_gm.json"));
  // training mean 3.0; errors 0, 2, 1 -> rmse sqrt(5/3), mae 1.0
  CHECK(report.at("overall").at("count").get<int>() == 3);
  CHECK(std::abs(report.at("overall").at("rmse").get<double>() - std::sqrt(5.0 / 3.0)) < 1e-12);
  CHECK(std::abs(report.at("overall").at("mae").get<double>() - 1.0) < 1e-12);
  for (const char* name : {"predictions_gm.csv", "segments_gm.csv", "heatmap_gm.csv"}) {
    CHECK(fs::exists(out / name));
  }
}

TEST_CASE("unknown model names are usage errors listing the valid set") {
  const fs::path out = g_work / "ev_bad";
  CHECK(run("evaluate --data " + (g_work / "tiny.csv").string() + " --out " + out.string() +
            " --seed 3 --models gm,nonsense") != 0);
  const std::string err = stderr_text();
  CHECK(err.find("nonsense") != std::string::npos);
  CHECK(err.find("hybrid") != std::string::npos);  // the valid list is printed
}

TEST_CASE("seed is mandatory for evaluate") {
  CHECK(run("evaluate --data " + (g_work / "tiny.csv").string() + " --out " +
            (g_work / "ev_noseed").string() + " --models gm") != 0);
}

TEST_CASE("evaluate reruns are byte-identical and hybrid pulls its parents") {
  const fs::path data = g_work / "synth_a" / "transcript.csv";
  const fs::path o1 = g_work / "ev1", o2 = g_work / "ev2";
  const std::string cfg = (g_work / "run.json").string();
  {
    std::ofstream out(cfg);
    out << R"({"hyper":{"fm":{"iterations":25,"rank":3},"rf":{"n_trees":10,"max_depth":4},)"
        << R"("svd":{"epochs":10},"pmlr":{"epochs":8},"knn":{"k":5},"sgd":{"iterations":5}}})";
  }
  const std::string args = "evaluate --config " + cfg + " --data " + data.string() +
                           " --seed 11 --models hybrid,gm ";
  REQUIRE(run(args + "--out " + o1.string()) == 0);
  REQUIRE(run(args + "--out " + o2.string()) == 0);
  for (const char* name :
       {"report_hybrid.json", "report_fm.json", "report_rf.json", "report_gm.json",
        "predictions_hybrid.csv", "predictions_fm.csv", "predictions_rf.csv"}) {
    CHECK_MESSAGE(fs::exists(o1 / name), name);
    CHECK_MESSAGE(slurp(o1 / name) == slurp(o2 / name), name);
  }
}

TEST_CASE("importance: knn is refused, fm/pmlr/rf emit reports") {
  const fs::path data = g_work / "synth_a" / "transcript.csv";
  CHECK(run("importance --data " + data.string() + " --out " + (g_work / "imp_bad").string() +
            " --seed 5 --models knn") != 0);
  CHECK(stderr_text().find("decomposition") != std::string::npos);

  const fs::path out = g_work / "imp";
  const std::string cfg = (g_work / "run.json").string();
  REQUIRE(run("importance --config " + cfg + " --data " + data.string() + " --out " +
              out.string() + " --seed 5 --models fm,pmlr,rf") == 0);
  for (const char* name : {"importance_fm.csv", "importance_fm.json", "evolution_fm.csv",
                           "importance_pmlr.csv", "importance_rf.csv", "evolution_rf.csv"}) {
    CHECK_MESSAGE(fs::exists(out / name), name);
  }
  // shares sum to 1 per report
  for (const char* name : {"importance_fm.json", "importance_pmlr.json", "importance_rf.json"}) {
    const auto j = nlohmann::json::parse(slurp(out / name));
    double sum = 0.0;
    for (const auto& e : j.at("aggregate")) sum += e.at("share").get<double>();
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
  // evolution files have one row per (term, feature)
  std::istringstream evo(slurp(out / "evolution_pmlr.csv"));
  std::string line;
  std::getline(evo, line);
  CHECK(line == "termnum,feature,share,share_1way,share_2way");
  int rows = 0;
  while (std::getline(evo, line)) ++rows;
  CHECK(rows > 0);
}

TEST_CASE("report re-renders JSON into CSV tables") {
  const fs::path out = g_work / "rerender";
  REQUIRE(run("report --report " + (g_work / "ev1" / "report_gm.json").string() + " --out " +
              out.string()) == 0);
  CHECK(fs::exists(out / "segments_gm.csv"));
  CHECK(fs::exists(out / "per_term_gm.csv"));
  CHECK(fs::exists(out / "heatmap_gm.csv"));
  const std::string segments = slurp(out / "segments_gm.csv");
  CHECK(segments.find("overall,") != std::string::npos);
}

TEST_CASE("feature selection artifacts appear when the flag is on") {
  const fs::path data = g_work / "synth_a" / "transcript.csv";
  const fs::path out = g_work / "ev_fs";
  const std::string cfg = (g_work / "run.json").string();
  REQUIRE(run("evaluate --config " + cfg + " --data " + data.string() + " --out " + out.string() +
              " --seed 13 --models fm --feature-selection --fs-threshold 0.002") == 0);
  CHECK(fs::exists(out / "report_fm.json"));
  CHECK(fs::exists(out / "report_fm_preselect.json"));
  CHECK(fs::exists(out / "selection_fm.json"));
  const auto sel = nlohmann::json::parse(slurp(out / "selection_fm.json"));
  const auto kept = sel.at("kept_features").get<std::vector<std::string>>();
  bool has_sid = false, has_cid = false;
  for (const auto& f : kept) {
    has_sid |= f == "sid";
    has_cid |= f == "cid";
  }
  CHECK(has_sid);
  CHECK(has_cid);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_tests <path-to-nextgrade-binary> [doctest args]\n");
    return 2;
  }
  g_binary = argv[1];
  g_work = fs::temp_directory_path() / "nextgrade_cli_tests";
  fs::remove_all(g_work);
  fs::create_directories(g_work);
  doctest::Context ctx(argc - 1, argv + 1);
  return ctx.run();
}
