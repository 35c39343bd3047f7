#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include <json.hpp>

#include "knockoff/filter.hpp"
#include "knockoff/gaussian_knockoffs.hpp"
#include "knockoff/hiv.hpp"
#include "knockoff/types.hpp"
#include "knockoff/vae.hpp"

// Replication studies: compose a data source, a knockoff generator, the lasso
// statistics and the filter into per-replication records and aggregate
// FDR/power tables. Every cell's randomness derives from
// (seed, rho index, replication index, purpose), so any cell can be re-run in
// isolation and worker count never changes results.
namespace knockoff::experiment {

struct ExperimentConfig {
  std::string source = "s1";  // s1 | s2 | hiv_signal | csv
  std::string csv_path;       // design file for source == "csv"
  std::string hiv_dir;        // snapshot dir for source == "hiv_signal"
  std::string generator = "second_order";  // vae | catvae | second_order | fixed_x
  std::string preset;                      // vae preset override
  std::string binary_output;               // "", "bernoulli", "threshold"
  filter::Mode mode = filter::Mode::KnockoffPlus;
  double q = 0.1;
  Index n = 200;
  Index p = 100;
  Index m = 10;
  std::vector<double> rho_grid{2, 4, 6, 8, 10};
  Family family = Family::Gaussian;
  Index replications = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path output_dir;  // empty: in-memory only
  Index lasso_grid = 200;
  double lambda_min_ratio = 1e-3;
  Index epochs = 20;
  Index batch_size = 25;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
std::string config_hash(const ExperimentConfig& cfg);

struct ReplicationRecord {
  Index rho_index = 0;
  double rho = 0.0;
  Index replication = 0;
  Index n_selected = 0;
  double fdp = 0.0;
  double power = 0.0;
  double threshold = std::numeric_limits<double>::infinity();
};

struct SummaryRow {
  double rho = 0.0;
  Index count = 0;
  double mean_fdp = 0.0;
  double se_fdp = 0.0;
  double mean_power = 0.0;
  double se_power = 0.0;
  bool se_defined = true;  // false when a single record makes the s.e. undefined
};

// Pre-built state shared across cells: fixed designs and once-trained
// generators for the hiv_signal / csv sources. Immutable during the run.
struct SharedContext {
  std::shared_ptr<const DataMatrix> fixed_design;  // null for s1/s2
  std::shared_ptr<const vae::VaeModel> trained_vae;
  std::shared_ptr<const gaussian::SecondOrderModel> second_order;
  std::shared_ptr<const gaussian::FixedXModel> fixed_x;
};

SharedContext prepare_shared(const ExperimentConfig& cfg);

// One experiment cell; identical output whether run alone or in the grid.
ReplicationRecord run_cell(const ExperimentConfig& cfg, const SharedContext& shared,
                           Index rho_index, Index replication);

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicationRecord> records;
  std::vector<SummaryRow> summary;
};

// Runs the full (rho x replication) grid with cfg.workers threads. With a
// nonempty output_dir, writes records.csv, summary.csv and config.json (and
// flushes partial records before rethrowing a cell error, which carries its
// (rho, replication) context).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Aggregates are a pure function of the records.
std::vector<SummaryRow> summarize(const std::vector<ReplicationRecord>& records);

void write_records_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                       const std::vector<ReplicationRecord>& records);
std::vector<ReplicationRecord> read_records_csv(const std::filesystem::path& path);
void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& summary);

// ---------------------------------------------------------------------------
// Real-data HIV pipeline (Table-style matched/selected counts)
// ---------------------------------------------------------------------------

struct HivAnalysisConfig {
  std::filesystem::path data_dir;
  std::vector<std::string> drugs;       // empty = all drugs in the snapshot
  std::vector<std::string> generators{"catvae", "second_order", "fixed_x"};
  std::vector<filter::Mode> modes{filter::Mode::KnockoffPlus, filter::Mode::Knockoff};
  double q = 0.2;
  std::uint64_t seed = 1;
  Index epochs = 20;
  Index batch_size = 25;
  Index lasso_grid = 200;
  double lambda_min_ratio = 1e-3;
  std::filesystem::path output_dir;  // empty: in-memory only
};

struct HivDrugResult {
  std::string drug;
  std::string generator;
  filter::Mode mode = filter::Mode::KnockoffPlus;
  bool ok = false;
  std::string note;  // failure reason when !ok (e.g. fixed-X needs n >= 2p)
  Index matched = 0;
  Index selected = 0;
  std::vector<std::string> selected_mutations;

  // Table cell: "matched/selected", or "0" when nothing was selected.
  std::string cell() const;
};

// Trains the CAT-VAE once on the full mutation matrix (the global design),
// samples one global knockoff matrix per row-wise generator, then runs the
// per-drug lasso + filter at each mode. fixed-X is refit per drug (its Gram
// identities are design-specific); drugs where it does not apply come back
// with ok = false and the reason.
std::vector<HivDrugResult> run_hiv_analysis(const HivAnalysisConfig& cfg);

void write_hiv_table_csv(const std::filesystem::path& path,
                         const std::vector<HivDrugResult>& results);

}  // namespace knockoff::experiment
