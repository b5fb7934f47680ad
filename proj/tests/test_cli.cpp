#include <fstream>
#include <sstream>

#include "doctest.h"
#include "slicescout/cli.hpp"
#include "slicescout/stack_io.hpp"
#include "testkit.hpp"

using namespace slicescout;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "slicescout");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines(const fs::path& p) {
  std::stringstream ss(read_text(p));
  std::vector<std::string> out;
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

// sub0.ssvol, sub1.nii.gz, sub2.ssvol and an unreadable broken.nii
void write_inputs(const fs::path& dir) {
  fs::create_directories(dir);
  for (int i = 0; i < 3; ++i) {
    PhantomSpec spec;
    spec.dims = {32, 40, 36};
    spec.center = {15.5, 19.5, 17.0 + i};
    spec.radii = {11, 14, 12};
    spec.seed = static_cast<std::uint64_t>(i);
    const auto vol = make_phantom(spec);
    const std::string stem = "sub" + std::to_string(i);
    if (i == 1) write_nifti(dir / (stem + ".nii.gz"), vol, NiftiType::float32);
    else write_raw(dir / (stem + ".ssvol"), vol);
  }
  std::ofstream(dir / "broken.nii") << "not a volume";
}

void write_committee_files(const fs::path& dir, const testkit::CommitteeFixture& fx, bool drop_one) {
  std::ofstream pred(dir / "pred.jsonl");
  bool dropped = false;
  for (const auto& r : fx.records) {
    if (drop_one && !dropped && r.model_id == "resnet") {
      dropped = true;
      continue;
    }
    pred << "{\"subject_id\": \"" << r.subject_id << "\", \"model_id\": \"" << r.model_id << "\", ";
    const auto& v = r.logits ? *r.logits : *r.confidences;
    pred << (r.logits ? "\"logits\"" : "\"confidences\"") << ": [" << std::setprecision(17) << v[0] << ", " << v[1]
         << "]}\n";
  }
  std::ofstream truth(dir / "truth.csv");
  truth << "subject_id,label\n";
  for (const auto& [id, d] : fx.truth) truth << id << "," << to_string(d) << "\n";
}

}  // namespace

TEST_CASE("select over a batch with one bad file") {
  testkit::TempDir tmp("cli-select");
  write_inputs(tmp / "in");
  const auto out = (tmp / "out").string();
  CHECK(run({"select", "--input", (tmp / "in").string(), "--output", out, "--window", "20", "--jobs", "2"}) ==
        kExitSubjectFailure);

  const auto summary = lines(tmp / "out" / "summary.csv");
  REQUIRE(summary.size() == 5);
  CHECK(summary[0] == "subject_id,source,status,start,window,total_score,roi,content_hash,duration_ms,error");
  CHECK(summary[1].rfind("broken,", 0) == 0);
  CHECK(summary[1].find(",error,") != std::string::npos);
  for (int i = 0; i < 3; ++i) {
    CHECK(summary[2 + i].rfind("sub" + std::to_string(i) + ",", 0) == 0);
    CHECK(summary[2 + i].find(",ok,") != std::string::npos);
  }

  const auto stack = read_stack(tmp / "out" / "sub1");
  CHECK(stack.slices.size() == 20);
  CHECK(stack.slices[0].width() == 16);  // resized by 2
  CHECK(stack.slices[0].height() == 20);
  const auto manifest = read_text(tmp / "out" / "sub1" / "manifest.txt");
  CHECK(manifest.find("param.resize_factor=2\n") != std::string::npos);
  CHECK(manifest.find("param.sigma=1.4\n") != std::string::npos);
}

TEST_CASE("select is deterministic across runs and job counts") {
  testkit::TempDir tmp("cli-det");
  write_inputs(tmp / "in");
  fs::remove(tmp / "in" / "broken.nii");
  for (const char* jobs : {"1", "3"}) {
    CHECK(run({"select", "-i", (tmp / "in" / "*.ssvol").string(), "-i", (tmp / "in" / "sub1.nii.gz").string(), "-o",
               (tmp / (std::string("run") + jobs)).string(), "--window", "24", "--jobs", jobs}) == kExitOk);
  }
  for (const char* s : {"sub0", "sub1", "sub2"}) {
    const auto a = read_text(tmp / "run1" / s / "manifest.txt");
    CHECK_FALSE(a.empty());
    CHECK(a == read_text(tmp / "run3" / s / "manifest.txt"));
  }
}

TEST_CASE("config file values sit between defaults and flags") {
  testkit::TempDir tmp("cli-config");
  write_inputs(tmp / "in");
  std::ofstream(tmp / "run.cfg") << "# comment\nwindow=30\nresize=1\nlow-frac=0.05\ninput=" << (tmp / "in" / "sub0.ssvol").string()
                                 << "\n";
  CHECK(run({"select", "--config", (tmp / "run.cfg").string(), "-o", (tmp / "a").string()}) == kExitOk);
  auto m = read_manifest(tmp / "a" / "sub0");
  CHECK(m.window.length == 30);
  CHECK(m.plane_width == 32);
  CHECK(run({"select", "--config", (tmp / "run.cfg").string(), "-o", (tmp / "b").string(), "--window", "12"}) == kExitOk);
  m = read_manifest(tmp / "b" / "sub0");
  CHECK(m.window.length == 12);
  const auto text = read_text(tmp / "b" / "sub0" / "manifest.txt");
  CHECK(text.find("param.low_frac=0.05\n") != std::string::npos);

  std::ofstream(tmp / "bad.cfg") << "windw=3\n";
  CHECK(run({"select", "--config", (tmp / "bad.cfg").string(), "-o", (tmp / "c").string()}) == kExitUsage);
}

TEST_CASE("usage errors exit with 2") {
  testkit::TempDir tmp("cli-usage");
  write_inputs(tmp / "in");
  const auto in = (tmp / "in" / "sub0.ssvol").string();
  CHECK(run({}) == kExitUsage);
  CHECK(run({"select", "--bogus"}) == kExitUsage);
  CHECK(run({"select"}) == kExitUsage);
  CHECK(run({"select", "-i", in, "--window", "0"}) == kExitUsage);
  CHECK(run({"select", "-i", in, "--window", "abc"}) == kExitUsage);
  CHECK(run({"select", "-i", in, "--low-frac", "0.5", "--high-frac", "0.2"}) == kExitUsage);
  CHECK(run({"select", "-i", in, "--method", "variance"}) == kExitUsage);
  CHECK(run({"select", "-i", (tmp / "nope.nii").string()}) == kExitUsage);
  CHECK(run({"committee", "-o", (tmp / "x").string()}) == kExitUsage);
  CHECK(run({"--help"}) == kExitOk);
}

TEST_CASE("profile and compare subcommands") {
  testkit::TempDir tmp("cli-profile");
  write_inputs(tmp / "in");
  const auto in = (tmp / "in" / "sub2.ssvol").string();
  CHECK(run({"profile", "-i", in, "-o", (tmp / "p").string(), "--plot"}) == kExitOk);
  const auto prof = lines(tmp / "p" / "sub2_edge_sum.csv");
  CHECK(prof.size() == 37);
  CHECK(prof[0] == "subject_id,slice_index,score,kind");
  CHECK(read_text(tmp / "p" / "sub2_edge_sum.pgm").rfind("P5\n640 240\n255\n", 0) == 0);
  CHECK(lines(tmp / "p" / "errors.csv").size() == 1);

  CHECK(run({"profile", "-i", in, "-o", (tmp / "p").string(), "--method", "entropy"}) == kExitOk);
  CHECK(lines(tmp / "p" / "sub2_entropy.csv").size() == 37);

  CHECK(run({"compare", "-i", (tmp / "in").string(), "-o", (tmp / "c").string(), "--window", "20"}) ==
        kExitSubjectFailure);
  const auto cmp = lines(tmp / "c" / "comparison.csv");
  CHECK(cmp.size() == 4);
  CHECK(lines(tmp / "c" / "errors.csv").size() == 2);
}

TEST_CASE("committee and ablate subcommands") {
  testkit::TempDir tmp("cli-committee");
  const auto fx = testkit::committee_fixture_exact();
  write_committee_files(tmp.path(), fx, false);
  const auto pred = (tmp / "pred.jsonl").string(), truth = (tmp / "truth.csv").string();

  CHECK(run({"committee", "--predictions", pred, "--truth", truth, "-o", (tmp / "c").string(), "--models",
             "resnet,cnn,efficientnet"}) == kExitOk);
  const auto metrics = lines(tmp / "c" / "metrics.csv");
  REQUIRE(metrics.size() == 2);
  CHECK(metrics[1].rfind("15,17,1,1,34,0.9411764705882353,0.9375,", 0) == 0);
  CHECK(lines(tmp / "c" / "contribution.csv") ==
        std::vector<std::string>{"model_id,decisions", "resnet,3", "cnn,6", "efficientnet,25"});
  CHECK(lines(tmp / "c" / "decisions.csv").size() == 35);
  CHECK(lines(tmp / "c" / "missing.csv").size() == 1);

  CHECK(run({"committee", "--predictions", pred, "--truth", truth, "-o", (tmp / "r").string(), "--models",
             "efficientnet,cnn,resnet"}) == kExitOk);
  CHECK(lines(tmp / "r" / "contribution.csv")[1] == "efficientnet,25");

  CHECK(run({"ablate", "--predictions", pred, "--truth", truth, "-o", (tmp / "a").string(), "--models",
             "resnet,cnn,efficientnet"}) == kExitOk);
  const auto abl = lines(tmp / "a" / "ablation.csv");
  REQUIRE(abl.size() == 8);
  CHECK(abl[0] == "models,subjects,accuracy,sensitivity,specificity");
  CHECK(abl[7].rfind("resnet+cnn+efficientnet,34,0.9411764705882353,", 0) == 0);
  CHECK(run({"ablate", "--predictions", pred, "--truth", truth, "-o", (tmp / "b").string(), "--subsets",
             "cnn;cnn+efficientnet"}) == kExitOk);
  CHECK(lines(tmp / "b" / "ablation.csv").size() == 3);

  write_committee_files(tmp.path(), fx, true);
  CHECK(run({"committee", "--predictions", pred, "--truth", truth, "-o", (tmp / "m").string()}) == kExitOk);
  CHECK(lines(tmp / "m" / "missing.csv").size() == 2);

  std::ofstream(tmp / "empty.jsonl") << "\n";
  CHECK(run({"committee", "--predictions", (tmp / "empty.jsonl").string(), "--truth", truth, "-o",
             (tmp / "e").string()}) == kExitUsage);
}

TEST_CASE("cohort subcommand") {
  testkit::TempDir tmp("cli-cohort");
  {
    std::ofstream meta(tmp / "meta.csv");
    meta << "subject_id,visit_id,session_id,age,cdr,source\n";
    for (const auto& rows : {testkit::cohort_fixture_oasis1(), testkit::cohort_fixture_oasis2()}) {
      for (const auto& r : rows)
        meta << r.subject_id << "," << r.visit_id << "," << r.session_id << "," << r.age << ","
             << (r.cdr ? std::to_string(*r.cdr) : std::string()) << "," << to_string(r.source) << "\n";
    }
  }
  CHECK(run({"cohort", "-i", (tmp / "meta.csv").string(), "-o", (tmp / "o").string(), "--seed", "5"}) == kExitOk);
  CHECK(lines(tmp / "o" / "cohort.csv").size() == 345);
  const auto split = lines(tmp / "o" / "split.csv");
  CHECK(split.size() == 345);
  CHECK(std::count_if(split.begin(), split.end(), [](const std::string& l) { return l.ends_with(",test"); }) == 34);

  CHECK(run({"cohort", "-i", (tmp / "meta.csv").string(), "-o", (tmp / "o2").string(), "--min-age", "0"}) == kExitOk);
  CHECK(lines(tmp / "o2" / "cohort.csv").size() > 345);
}
