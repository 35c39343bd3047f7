#include "knockoff/experiment.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include "knockoff/io.hpp"
#include "knockoff/lasso.hpp"
#include "knockoff/rng.hpp"
#include "knockoff/sim_data.hpp"

namespace knockoff::experiment {

using nlohmann::json;

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["source"] = cfg.source;
  j["csv_path"] = cfg.csv_path;
  j["hiv_dir"] = cfg.hiv_dir;
  j["generator"] = cfg.generator;
  j["preset"] = cfg.preset;
  j["binary_output"] = cfg.binary_output;
  j["mode"] = filter::to_string(cfg.mode);
  j["q"] = cfg.q;
  j["n"] = cfg.n;
  j["p"] = cfg.p;
  j["m"] = cfg.m;
  j["rho_grid"] = cfg.rho_grid;
  j["family"] = to_string(cfg.family);
  j["replications"] = cfg.replications;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["lasso_grid"] = cfg.lasso_grid;
  j["lambda_min_ratio"] = cfg.lambda_min_ratio;
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.source = j.value("source", cfg.source);
  cfg.csv_path = j.value("csv_path", cfg.csv_path);
  cfg.hiv_dir = j.value("hiv_dir", cfg.hiv_dir);
  cfg.generator = j.value("generator", cfg.generator);
  cfg.preset = j.value("preset", cfg.preset);
  cfg.binary_output = j.value("binary_output", cfg.binary_output);
  if (j.contains("mode")) cfg.mode = filter::mode_from_string(j["mode"]);
  cfg.q = j.value("q", cfg.q);
  cfg.n = j.value("n", cfg.n);
  cfg.p = j.value("p", cfg.p);
  cfg.m = j.value("m", cfg.m);
  if (j.contains("rho_grid")) cfg.rho_grid = j["rho_grid"].get<std::vector<double>>();
  if (j.contains("family")) cfg.family = family_from_string(j["family"]);
  cfg.replications = j.value("replications", cfg.replications);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.workers = j.value("workers", cfg.workers);
  cfg.lasso_grid = j.value("lasso_grid", cfg.lasso_grid);
  cfg.lambda_min_ratio = j.value("lambda_min_ratio", cfg.lambda_min_ratio);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  return io::content_hash_hex(to_json(cfg).dump());
}

namespace {

std::string default_preset(const ExperimentConfig& cfg) {
  if (!cfg.preset.empty()) return cfg.preset;
  if (cfg.generator == "catvae") return "hiv-catvae";
  if (cfg.source == "s1") return "s1-vae";
  if (cfg.source == "s2") return "s2-vae";
  return "hiv-catvae";
}

void apply_binary_output(vae::VaeModel& model, const std::string& mode) {
  if (mode.empty()) return;
  vae::BinaryOutput b;
  if (mode == "bernoulli")
    b = vae::BinaryOutput::BernoulliSample;
  else if (mode == "threshold")
    b = vae::BinaryOutput::Threshold;
  else
    throw ParseError("unknown binary output mode: " + mode);
  std::visit([&](auto& m) { m.binary_output = b; }, model);
}

bool uses_vae(const ExperimentConfig& cfg) {
  return cfg.generator == "vae" || cfg.generator == "catvae";
}

vae::TrainingConfig training_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  vae::TrainingConfig tc;
  tc.batch_size = cfg.batch_size;
  tc.epochs = cfg.epochs;
  tc.seed = seed;
  return tc;
}

// Purpose tags for the per-cell random streams.
enum Stream : std::uint64_t { kData = 0, kFit = 1, kSample = 2, kOutcome = 3 };

}  // namespace

SharedContext prepare_shared(const ExperimentConfig& cfg) {
  SharedContext shared;
  if (cfg.source != "hiv_signal" && cfg.source != "csv") return shared;

  DataMatrix design;
  if (cfg.source == "hiv_signal") {
    if (cfg.hiv_dir.empty())
      throw ContractError("hiv_signal source needs hiv_dir");
    hiv::MutationDataset ds = hiv::load_dir(cfg.hiv_dir);
    design.values = ds.matrix;
    design.kinds.assign(static_cast<std::size_t>(ds.matrix.cols()),
                        ColumnKind::Binary);
    design.col_names = ds.mutations;
  } else {
    design = io::read_data_csv(cfg.csv_path);
  }
  auto fixed = std::make_shared<DataMatrix>(std::move(design));
  shared.fixed_design = fixed;

  // Fixed designs get one trained/fitted generator for the whole study.
  if (uses_vae(cfg)) {
    vae::VaeModel model = vae::make_preset(default_preset(cfg), fixed->cols());
    apply_binary_output(model, cfg.binary_output);
    vae::VaeModel trained = vae::train(
        std::move(model), *fixed, training_config(cfg, derive_seed(cfg.seed, 0, 0, kFit)));
    shared.trained_vae = std::make_shared<const vae::VaeModel>(std::move(trained));
  } else if (cfg.generator == "second_order") {
    shared.second_order = std::make_shared<const gaussian::SecondOrderModel>(
        gaussian::fit_second_order(*fixed));
  } else if (cfg.generator == "fixed_x") {
    Rng rng(derive_seed(cfg.seed, 0, 0, kFit));
    shared.fixed_x = std::make_shared<const gaussian::FixedXModel>(
        gaussian::fit_fixed_x(*fixed, rng));
  } else {
    throw ParseError("unknown generator: " + cfg.generator);
  }
  return shared;
}

ReplicationRecord run_cell(const ExperimentConfig& cfg, const SharedContext& shared,
                           Index rho_index, Index replication) {
  if (rho_index < 0 || rho_index >= static_cast<Index>(cfg.rho_grid.size()))
    throw ContractError("run_cell: rho_index out of range");
  const double rho = cfg.rho_grid[static_cast<std::size_t>(rho_index)];
  const auto a = static_cast<std::uint64_t>(rho_index);
  const auto b = static_cast<std::uint64_t>(replication);

  // Fresh data for the simulated sources; the fixed design otherwise.
  DataMatrix x;
  simdata::SupportKind support = simdata::SupportKind::Leading;
  if (cfg.source == "s1") {
    x = simdata::generate_setting1(cfg.n, cfg.p, derive_seed(cfg.seed, a, b, kData));
  } else if (cfg.source == "s2") {
    x = simdata::generate_setting2(cfg.n, cfg.p, derive_seed(cfg.seed, a, b, kData));
  } else {
    x = *shared.fixed_design;
    support = simdata::SupportKind::Random;
  }

  // Knockoffs never see the outcome; it is generated afterwards.
  KnockoffPair pair;
  if (uses_vae(cfg)) {
    Rng gen_rng(derive_seed(cfg.seed, a, b, kSample));
    if (shared.trained_vae) {
      pair = vae::generate_knockoffs(*shared.trained_vae, x, gen_rng);
    } else {
      vae::VaeModel model = vae::make_preset(default_preset(cfg), x.cols());
      apply_binary_output(model, cfg.binary_output);
      vae::VaeModel trained =
          vae::train(std::move(model), x,
                     training_config(cfg, derive_seed(cfg.seed, a, b, kFit)));
      pair = vae::generate_knockoffs(trained, x, gen_rng);
    }
  } else if (cfg.generator == "second_order") {
    Rng sample_rng(derive_seed(cfg.seed, a, b, kSample));
    if (shared.second_order) {
      pair = gaussian::sample_second_order(*shared.second_order, x.values, sample_rng);
    } else {
      auto model = gaussian::fit_second_order(x);
      pair = gaussian::sample_second_order(model, x.values, sample_rng);
    }
  } else if (cfg.generator == "fixed_x") {
    if (shared.fixed_x) {
      pair = gaussian::sample_fixed_x(*shared.fixed_x, x);
    } else {
      Rng fit_rng(derive_seed(cfg.seed, a, b, kFit));
      auto model = gaussian::fit_fixed_x(x, fit_rng);
      pair = gaussian::sample_fixed_x(model, x);
    }
  } else {
    throw ParseError("unknown generator: " + cfg.generator);
  }

  simdata::Outcome outcome = simdata::generate_outcome(
      x.values, cfg.m, rho, cfg.family, derive_seed(cfg.seed, a, b, kOutcome),
      support);

  lasso::LassoProblem prob;
  prob.design = concat_columns(pair.original, pair.knockoff);
  prob.response = outcome.y;
  prob.family = cfg.family;
  lasso::PathOptions opt;
  opt.grid_size = cfg.lasso_grid;
  opt.lambda_min_ratio = cfg.lambda_min_ratio;
  lasso::LassoPath path = lasso::solve_path(prob, opt);
  Vector z = lasso::entry_lambdas(path);

  const Index p = x.cols();
  filter::FeatureStatVector fs = filter::signed_max_lambda(z.head(p), z.tail(p));
  filter::SelectionResult sel = filter::threshold(fs.w, cfg.q, cfg.mode);
  filter::Score sc = filter::score(sel.selected, outcome.true_set);

  ReplicationRecord rec;
  rec.rho_index = rho_index;
  rec.rho = rho;
  rec.replication = replication;
  rec.n_selected = static_cast<Index>(sel.selected.size());
  rec.fdp = sc.fdp;
  rec.power = sc.power;
  rec.threshold = sel.threshold;
  return rec;
}

std::vector<SummaryRow> summarize(const std::vector<ReplicationRecord>& records) {
  if (records.empty()) throw ContractError("summarize: no records");
  Index max_idx = 0;
  for (const auto& r : records) max_idx = std::max(max_idx, r.rho_index);
  std::vector<SummaryRow> rows(static_cast<std::size_t>(max_idx + 1));
  std::vector<std::vector<double>> fdps(rows.size()), powers(rows.size());
  for (const auto& r : records) {
    auto i = static_cast<std::size_t>(r.rho_index);
    rows[i].rho = r.rho;
    fdps[i].push_back(r.fdp);
    powers[i].push_back(r.power);
  }
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  auto se_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) /
                     static_cast<double>(v.size()));
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].count = static_cast<Index>(fdps[i].size());
    rows[i].mean_fdp = mean_of(fdps[i]);
    rows[i].se_fdp = se_of(fdps[i]);
    rows[i].mean_power = mean_of(powers[i]);
    rows[i].se_power = se_of(powers[i]);
    rows[i].se_defined = fdps[i].size() >= 2;
  }
  return rows;
}

void write_records_csv(const std::filesystem::path& path, const ExperimentConfig& cfg,
                       const std::vector<ReplicationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << "# config_hash: " << config_hash(cfg) << "\n";
  out << "# source: " << cfg.source << "\n";
  out << "# generator: " << cfg.generator << "\n";
  out << "# family: " << to_string(cfg.family) << "\n";
  out << "# mode: " << filter::to_string(cfg.mode) << "\n";
  out << "# q: " << io::format_double(cfg.q) << "\n";
  out << "# seed: " << cfg.seed << "\n";
  out << "rho_index,rho,replication,n_selected,fdp,power,threshold\n";
  for (const auto& r : records) {
    out << r.rho_index << "," << io::format_double(r.rho) << "," << r.replication
        << "," << r.n_selected << "," << io::format_double(r.fdp) << ","
        << io::format_double(r.power) << "," << io::format_double(r.threshold)
        << "\n";
  }
}

std::vector<ReplicationRecord> read_records_csv(const std::filesystem::path& path) {
  io::CsvMatrix csv = io::read_matrix_csv(path);
  if (csv.col_names !=
      std::vector<std::string>{"rho_index", "rho", "replication", "n_selected",
                               "fdp", "power", "threshold"})
    throw ParseError("not a records csv: " + path.string());
  std::vector<ReplicationRecord> out;
  for (Index i = 0; i < csv.values.rows(); ++i) {
    ReplicationRecord r;
    r.rho_index = static_cast<Index>(csv.values(i, 0));
    r.rho = csv.values(i, 1);
    r.replication = static_cast<Index>(csv.values(i, 2));
    r.n_selected = static_cast<Index>(csv.values(i, 3));
    r.fdp = csv.values(i, 4);
    r.power = csv.values(i, 5);
    r.threshold = csv.values(i, 6);
    out.push_back(r);
  }
  return out;
}

void write_summary_csv(const std::filesystem::path& path,
                       const std::vector<SummaryRow>& summary) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << "rho,replications,mean_fdp,se_fdp,mean_power,se_power,se_defined\n";
  for (const auto& s : summary) {
    out << io::format_double(s.rho) << "," << s.count << ","
        << io::format_double(s.mean_fdp) << "," << io::format_double(s.se_fdp) << ","
        << io::format_double(s.mean_power) << "," << io::format_double(s.se_power)
        << "," << (s.se_defined ? 1 : 0) << "\n";
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.rho_grid.empty()) throw ContractError("run_experiment: empty rho grid");
  if (cfg.replications < 1) throw ContractError("run_experiment: no replications");
  if (!(cfg.q > 0.0 && cfg.q < 1.0)) throw ContractError("run_experiment: bad q");

  SharedContext shared = prepare_shared(cfg);
  const std::size_t n_rho = cfg.rho_grid.size();
  const auto n_cells = n_rho * static_cast<std::size_t>(cfg.replications);

  std::vector<std::optional<ReplicationRecord>> slots(n_cells);
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_cells || failed.load()) break;
      const auto rho_index = static_cast<Index>(i / cfg.replications);
      const auto rep = static_cast<Index>(i % cfg.replications);
      try {
        slots[i] = run_cell(cfg, shared, rho_index, rep);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) {
          first_error = std::make_exception_ptr(Error(
              std::string(e.what()) + " (rho=" +
              io::format_double(cfg.rho_grid[static_cast<std::size_t>(rho_index)]) +
              ", replication=" + std::to_string(rep) + ")"));
          failed.store(true);
        }
        break;
      }
    }
  };

  const int n_workers = std::max(1, cfg.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  result.config = cfg;
  for (auto& s : slots)
    if (s) result.records.push_back(*s);

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    json cj = to_json(cfg);
    cj["config_hash"] = config_hash(cfg);
    io::save_json(cfg.output_dir / "config.json", cj);
    // Partial results are flushed even on failure.
    write_records_csv(cfg.output_dir / "records.csv", cfg, result.records);
  }
  if (first_error) std::rethrow_exception(first_error);

  result.summary = summarize(result.records);
  if (!cfg.output_dir.empty())
    write_summary_csv(cfg.output_dir / "summary.csv", result.summary);
  return result;
}

// ---------------------------------------------------------------------------
// HIV table pipeline
// ---------------------------------------------------------------------------

std::string HivDrugResult::cell() const {
  if (!ok) return "NA(" + note + ")";
  if (selected == 0) return "0";
  return std::to_string(matched) + "/" + std::to_string(selected);
}

std::vector<HivDrugResult> run_hiv_analysis(const HivAnalysisConfig& cfg) {
  hiv::MutationDataset ds = hiv::load_dir(cfg.data_dir);
  std::vector<std::string> drugs = cfg.drugs.empty() ? ds.drugs : cfg.drugs;

  DataMatrix global;
  global.values = ds.matrix;
  global.kinds.assign(static_cast<std::size_t>(ds.matrix.cols()),
                      ColumnKind::Binary);
  global.col_names = ds.mutations;

  // Row-wise generators act on the global design once; per-drug views then
  // subset rows and columns of the same knockoff matrix.
  std::map<std::string, Matrix> global_knockoffs;
  for (const std::string& gen : cfg.generators) {
    if (gen == "catvae" || gen == "vae") {
      vae::VaeModel model = vae::make_preset("hiv-catvae", global.cols());
      vae::TrainingConfig tc;
      tc.batch_size = cfg.batch_size;
      tc.epochs = cfg.epochs;
      tc.seed = derive_seed(cfg.seed, 1, 0, 0);
      vae::VaeModel trained = vae::train(std::move(model), global, tc);
      Rng rng(derive_seed(cfg.seed, 1, 0, 1));
      global_knockoffs[gen] = vae::generate_knockoffs(trained, global, rng).knockoff;
    } else if (gen == "second_order") {
      auto model = gaussian::fit_second_order(global);
      Rng rng(derive_seed(cfg.seed, 2, 0, 1));
      global_knockoffs[gen] =
          gaussian::sample_second_order(model, global.values, rng).knockoff;
    } else if (gen == "fixed_x") {
      // design-specific; fitted per drug below
    } else {
      throw ParseError("unknown generator: " + gen);
    }
  }

  std::vector<HivDrugResult> results;
  for (const std::string& drug : drugs) {
    hiv::DrugView view = hiv::per_drug_view(ds, drug);
    for (const std::string& gen : cfg.generators) {
      Matrix x_d, xk_d;
      bool ok = true;
      std::string note;
      if (gen == "fixed_x") {
        try {
          Rng rng(derive_seed(cfg.seed, 3, 0, 1));
          DataMatrix dv;
          dv.values = view.x;
          dv.kinds.assign(static_cast<std::size_t>(view.x.cols()),
                          ColumnKind::Binary);
          auto model = gaussian::fit_fixed_x(dv, rng);
          KnockoffPair pair = gaussian::sample_fixed_x(model, dv);
          x_d = pair.original;  // standardized design
          xk_d = pair.knockoff;
        } catch (const std::exception& e) {
          ok = false;
          note = e.what();
        }
      } else {
        const Matrix& gk = global_knockoffs.at(gen);
        x_d = view.x;
        xk_d.resize(view.x.rows(), view.x.cols());
        for (Index r = 0; r < view.x.rows(); ++r)
          for (std::size_t c = 0; c < view.kept_columns.size(); ++c)
            xk_d(r, static_cast<Index>(c)) =
                gk(view.kept_rows[static_cast<std::size_t>(r)],
                   view.kept_columns[c]);
      }

      for (filter::Mode mode : cfg.modes) {
        HivDrugResult res;
        res.drug = drug;
        res.generator = gen;
        res.mode = mode;
        if (!ok) {
          res.ok = false;
          res.note = note;
          results.push_back(res);
          continue;
        }
        lasso::LassoProblem prob;
        prob.design = concat_columns(x_d, xk_d);
        prob.response = view.y;
        prob.family = Family::Gaussian;
        lasso::PathOptions opt;
        opt.grid_size = cfg.lasso_grid;
        opt.lambda_min_ratio = cfg.lambda_min_ratio;
        lasso::LassoPath path = lasso::solve_path(prob, opt);
        Vector z = lasso::entry_lambdas(path);
        const Index p = x_d.cols();
        filter::FeatureStatVector fs =
            filter::signed_max_lambda(z.head(p), z.tail(p));
        filter::SelectionResult sel = filter::threshold(fs.w, cfg.q, mode);
        res.ok = true;
        for (Index j : sel.selected)
          res.selected_mutations.push_back(
              view.kept_mutations[static_cast<std::size_t>(j)]);
        hiv::TsmOverlap overlap =
            hiv::tsm_overlap(res.selected_mutations, ds.tsm_positions);
        res.matched = overlap.matched;
        res.selected = overlap.selected;
        results.push_back(res);
      }
    }
  }

  if (!cfg.output_dir.empty()) {
    std::filesystem::create_directories(cfg.output_dir);
    write_hiv_table_csv(cfg.output_dir / "hiv_table.csv", results);
  }
  return results;
}

void write_hiv_table_csv(const std::filesystem::path& path,
                         const std::vector<HivDrugResult>& results) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << "drug,generator,mode,matched,selected,cell,selected_mutations\n";
  for (const auto& r : results) {
    out << r.drug << "," << r.generator << "," << filter::to_string(r.mode) << ",";
    if (r.ok)
      out << r.matched << "," << r.selected;
    else
      out << "NA,NA";
    out << "," << r.cell() << ",";
    for (std::size_t i = 0; i < r.selected_mutations.size(); ++i)
      out << (i ? ";" : "") << r.selected_mutations[i];
    out << "\n";
  }
}

}  // namespace knockoff::experiment
