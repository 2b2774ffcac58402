#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "screenline/cli.hpp"
#include "screenline/store.hpp"
#include "screenline/workflow.hpp"
#include "test_support.hpp"

using namespace screenline;
using screenline::testing::TempDir;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "screenline");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(Cli, EndToEnd) {
  TempDir dir("cli");
  const std::string db = dir.file("db");
  const std::string data = dir.file("synth");

  auto r = run({"--data-dir", db, "synth", "--out-dir", data, "--episode", "e1", "--series", "show", "--identities",
                "8", "--dim", "64", "--duration-ms", "60000", "--scene-ms", "10000", "--fps", "2", "--seed", "3"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const Json summary = Json::parse(r.out);
  EXPECT_TRUE(summary["registered"].get<bool>());

  r = run({"--data-dir", db, "process", "--index", summary["gallery"].get<std::string>(), "--workers", "2"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;

  r = run({"--data-dir", db, "query", "--episode", "e1"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto records = parse_jsonl(r.out);
  EXPECT_EQ(records.size(), summary["events"].get<std::size_t>());

  r = run({"--data-dir", db, "chart", "total_counts", "--episode", "e1"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  Store store(db);
  ChartRequest req;
  req.episode_id = "e1";
  EXPECT_EQ(r.out, chart_payload(get_chart(store, req)));

  r = run({"--data-dir", db, "chart", "segment_heatmap", "--episode", "e1", "--out", dir.file("h.json")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(Json::parse(slurp(dir.file("h.json")))["chart_type"], "segment_heatmap");

  r = run({"--data-dir", db, "export", "--episode", "e1", "--out-dir", dir.file("exp")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(parse_jsonl(slurp(dir.file("exp/e1.jsonl"))), records);

  // round trip through import into a second store
  const std::string db2 = dir.file("db2");
  r = run({"--data-dir", db2, "import", "--episode", "e1", "--file", dir.file("exp/e1.jsonl"), "--meta",
           dir.file("exp/e1.meta.json")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(run({"--data-dir", db2, "query", "--episode", "e1"}).out, run({"--data-dir", db, "query", "--episode", "e1"}).out);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli-codes");
  const std::string db = dir.file("db");
  EXPECT_EQ(run({"--help"}).code, cli::kOk);
  EXPECT_EQ(run({"--data-dir", db, "bogus"}).code, cli::kUsage);
  EXPECT_EQ(run({"--data-dir", db, "chart", "bubble", "--episode", "x"}).code, cli::kUsage);
  EXPECT_EQ(run({"--data-dir", db, "process"}).code, cli::kUsage);

  auto r = run({"--data-dir", db, "chart", "total_counts", "--episode", "missing"});
  EXPECT_EQ(r.code, cli::kDataError);
  EXPECT_NE(r.err.find("missing"), std::string::npos);
  EXPECT_EQ(run({"--data-dir", db, "query", "--from-ms", "5", "--to-ms", "1"}).code, cli::kDataError);

  std::ofstream(dir.file("bad.jsonl")) << "{oops\n";
  EXPECT_EQ(run({"--data-dir", db, "import", "--episode", "x", "--file", dir.file("bad.jsonl")}).code, cli::kDataError);
}
