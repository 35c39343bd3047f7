#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "knockoff/hiv.hpp"

using namespace knockoff;
using namespace knockoff::hiv;

namespace {

const std::filesystem::path kSample = std::filesystem::path(HIV_SAMPLE_DIR);

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

}  // namespace

TEST_CASE("bundled sample loads with the documented shape") {
  MutationDataset ds = load_dir(kSample);
  CHECK(ds.matrix.rows() == 60);
  CHECK(ds.matrix.cols() == 13);  // 24I occurs 3 times and is filtered out
  CHECK(ds.mutations.size() == 13);
  for (const auto& m : ds.mutations) CHECK(m != "24I");
  // boundary: 32I has exactly 4 occurrences and stays
  CHECK(std::find(ds.mutations.begin(), ds.mutations.end(), "32I") !=
        ds.mutations.end());
  CHECK(ds.drugs == std::vector<std::string>{"DRA", "DRB"});
  CHECK(ds.tsm_positions == std::set<int>{30, 46, 48, 54, 82, 90});

  // matrix is binary and the filter is idempotent: every kept column has
  // at least min_occurrence ones
  for (Index j = 0; j < ds.matrix.cols(); ++j) {
    CHECK(ds.matrix.col(j).sum() >= 4.0);
    for (Index i = 0; i < ds.matrix.rows(); ++i)
      CHECK((ds.matrix(i, j) == 0.0 || ds.matrix(i, j) == 1.0));
  }
}

TEST_CASE("per-drug views restrict rows and refilter columns") {
  MutationDataset ds = load_dir(kSample);

  DrugView a = per_drug_view(ds, "DRA");
  CHECK(a.x.rows() == 42);  // 45 observed minus 3 nonpositive
  CHECK(a.dropped_nonpositive == 3);
  CHECK(a.y.size() == 42);
  CHECK(a.y.allFinite());
  for (std::size_t c = 0; c < a.kept_mutations.size(); ++c) {
    double count = a.x.col(static_cast<Index>(c)).sum();
    CHECK(count >= 2.0);
  }

  DrugView b = per_drug_view(ds, "DRB");
  CHECK(b.x.rows() == 55);
  CHECK(b.dropped_nonpositive == 0);
}

TEST_CASE("unknown drug error lists what is available") {
  MutationDataset ds = load_dir(kSample);
  try {
    per_drug_view(ds, "XYZ");
    FAIL("expected throw");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("DRA") != std::string::npos);
    CHECK(msg.find("DRB") != std::string::npos);
  }
}

TEST_CASE("all-missing outcome column is an error, not an empty view") {
  auto mut = write_temp("hiv_t1_mut.tsv",
                        "patient_id\t10I\t20V\n"
                        "a\t1\t1\nb\t1\t1\nc\t1\t1\nd\t1\t1\ne\t1\t0\n");
  auto sus = write_temp("hiv_t1_sus.tsv",
                        "patient_id\tD1\tD2\n"
                        "a\t2.0\tNA\nb\t1.5\tNA\nc\t3.0\tNA\nd\t1.1\tNA\ne\t2.2\tNA\n");
  auto tsm = write_temp("hiv_t1_tsm.txt", "10\n");
  MutationDataset ds = load(mut, sus, tsm);
  CHECK_NOTHROW(per_drug_view(ds, "D1"));
  CHECK_THROWS_AS(per_drug_view(ds, "D2"), Error);
}

TEST_CASE("per-drug refilter drops rare-within-subset mutations") {
  // 30N occurs 4 times globally but only once among D1-observed rows.
  auto mut = write_temp("hiv_t2_mut.tsv",
                        "patient_id\t10I\t30N\n"
                        "a\t1\t1\n"
                        "b\t1\t1\n"
                        "c\t1\t1\n"
                        "d\t1\t1\n"
                        "e\t1\t0\n"
                        "f\t1\t0\n");
  auto sus = write_temp("hiv_t2_sus.tsv",
                        "patient_id\tD1\n"
                        "a\t2.0\nb\tNA\nc\tNA\nd\tNA\ne\t1.5\nf\t2.5\n");
  auto tsm = write_temp("hiv_t2_tsm.txt", "10\n");
  MutationDataset ds = load(mut, sus, tsm);
  CHECK(ds.matrix.cols() == 2);
  DrugView v = per_drug_view(ds, "D1");
  CHECK(v.kept_mutations == std::vector<std::string>{"10I"});
}

TEST_CASE("malformed input errors carry context") {
  SUBCASE("empty file") {
    auto mut = write_temp("hiv_t3_mut.tsv", "");
    auto sus = write_temp("hiv_t3_sus.tsv", "patient_id\tD1\na\t1.0\n");
    auto tsm = write_temp("hiv_t3_tsm.txt", "10\n");
    CHECK_THROWS_AS(load(mut, sus, tsm), ParseError);
  }
  SUBCASE("duplicate labels") {
    auto mut = write_temp("hiv_t4_mut.tsv",
                          "patient_id\t10I\t10I\na\t1\t1\nb\t1\t1\nc\t1\t1\nd\t1\t1\n");
    auto sus = write_temp("hiv_t4_sus.tsv", "patient_id\tD1\na\t1.0\n");
    auto tsm = write_temp("hiv_t4_tsm.txt", "10\n");
    try {
      load(mut, sus, tsm);
      FAIL("expected throw");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("10I") != std::string::npos);
    }
  }
  SUBCASE("bad row names the line") {
    auto mut = write_temp("hiv_t5_mut.tsv",
                          "patient_id\t10I\na\t1\nb\t2\nc\t1\nd\t1\n");
    auto sus = write_temp("hiv_t5_sus.tsv", "patient_id\tD1\na\t1.0\n");
    auto tsm = write_temp("hiv_t5_tsm.txt", "10\n");
    try {
      load(mut, sus, tsm);
      FAIL("expected throw");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
  }
}

TEST_CASE("mutation positions and TSM overlap") {
  CHECK(mutation_position("46I") == 46);
  CHECK(mutation_position("9D") == 9);
  CHECK_THROWS_AS(mutation_position("X12"), ParseError);

  std::set<int> tsm{30, 46};
  TsmOverlap none = tsm_overlap({}, tsm);
  CHECK(none.matched == 0);
  CHECK(none.selected == 0);

  TsmOverlap all = tsm_overlap({"30N", "46I", "46L"}, tsm);
  CHECK(all.matched == 3);
  CHECK(all.selected == 3);

  TsmOverlap mixed = tsm_overlap({"30N", "71V"}, tsm);
  CHECK(mixed.matched == 1);
  CHECK(mixed.selected == 2);
}

TEST_CASE("reference snapshot matches the published dimensions when present") {
  const auto ref = std::filesystem::path(HIV_REFERENCE_DIR);
  if (!std::filesystem::exists(ref / "mutations.tsv")) {
    MESSAGE("reference snapshot not fetched; run scripts/fetch_hiv_data.py");
    return;
  }
  MutationDataset ds = load_dir(ref);
  CHECK(ds.matrix.rows() == 846);
  CHECK(ds.matrix.cols() == 186);
  const std::vector<std::pair<std::string, Index>> sizes = {
      {"APV", 767}, {"ATV", 328}, {"IDV", 825}, {"LPV", 515},
      {"NFV", 842}, {"RTV", 793}, {"SQV", 824}};
  for (const auto& [drug, n] : sizes) {
    DrugView v = per_drug_view(ds, drug);
    CHECK(v.x.rows() == n);
  }
}
