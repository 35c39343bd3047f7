#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "knockoff/types.hpp"

// HIV-1 protease-inhibitor dataset: binary mutation indicators, per-drug
// drug-susceptibility outcomes, and the treatment-selected mutation (TSM)
// reference list. Input format is the repo's own pinned snapshot layout (tab
// separated, documented in the README); scripts/fetch_hiv_data.py downloads
// and converts the published study data into it.
namespace knockoff::hiv {

struct MutationDataset {
  std::vector<std::string> patients;   // row ids
  std::vector<std::string> mutations;  // labels "<position><residue>", e.g. 46I
  Matrix matrix;                       // n x p in {0,1}
  std::vector<std::string> drugs;
  Matrix susceptibility;               // n x drugs, NaN = missing
  std::set<int> tsm_positions;
  Index min_occurrence = 4;
};

// Parses the snapshot and applies the global filter: keep mutations with at
// least `min_occurrence` ones. Errors carry line numbers for malformed rows;
// duplicate mutation labels and empty files are rejected.
MutationDataset load(const std::filesystem::path& mutations_file,
                     const std::filesystem::path& susceptibility_file,
                     const std::filesystem::path& tsm_file,
                     Index min_occurrence = 4);

// Convenience: <dir>/mutations.tsv, <dir>/susceptibility.tsv, <dir>/tsm.txt.
MutationDataset load_dir(const std::filesystem::path& dir, Index min_occurrence = 4);

struct DrugView {
  Matrix x;                               // analysis-ready design
  Vector y;                               // log susceptibility
  std::vector<std::string> kept_mutations;
  std::vector<Index> kept_columns;        // indices into dataset.mutations
  std::vector<Index> kept_rows;           // indices into dataset.patients
  Index dropped_nonpositive = 0;          // rows lost to log() domain, warned
};

// Rows restricted to patients with an observed, positive susceptibility for
// the drug (nonpositive values are dropped and counted); y is the log of the
// remaining values; columns re-filtered to >= min_occurrence ones within the
// kept rows. Unknown drugs raise an error listing the available names.
DrugView per_drug_view(const MutationDataset& dataset, const std::string& drug,
                       Index min_occurrence = 2);

struct TsmOverlap {
  Index matched = 0;   // selected mutations whose position is in the TSM list
  Index selected = 0;  // total selected
};

// Matching is by position only (the TSM list's convention), so all residues
// at a listed position count as matches.
TsmOverlap tsm_overlap(const std::vector<std::string>& selected_mutations,
                       const std::set<int>& tsm_positions);

// Leading integer of a mutation label ("46I" -> 46); ParseError otherwise.
int mutation_position(const std::string& label);

}  // namespace knockoff::hiv
