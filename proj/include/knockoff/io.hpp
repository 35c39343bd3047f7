#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "knockoff/nn.hpp"
#include "knockoff/types.hpp"

namespace knockoff::io {

// ---------------------------------------------------------------------------
// Model checkpoints (JSON, self-describing, mandatory format_version)
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

nlohmann::json mlp_to_json(const nn::MlpModel& model);
nn::MlpModel mlp_from_json(const nlohmann::json& j);

void save_mlp_checkpoint(const std::filesystem::path& path,
                         const nn::MlpModel& model, std::uint64_t seed);

struct MlpCheckpoint {
  nn::MlpModel model;
  std::uint64_t seed = 0;
};
MlpCheckpoint load_mlp_checkpoint(const std::filesystem::path& path);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// CSV with '#'-prefixed provenance header lines
// ---------------------------------------------------------------------------

struct CsvMatrix {
  Matrix values;
  std::vector<std::string> col_names;
  std::map<std::string, std::string> header;
};

// Doubles are written with 17 significant digits so a read-back is lossless.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const std::vector<std::string>& col_names,
                      const std::map<std::string, std::string>& header = {});
CsvMatrix read_matrix_csv(const std::filesystem::path& path);

void write_data_csv(const std::filesystem::path& path, const DataMatrix& d,
                    std::map<std::string, std::string> header = {});
DataMatrix read_data_csv(const std::filesystem::path& path);

// Knockoff matrix with generator/seed provenance.
void write_knockoff_csv(const std::filesystem::path& path, const KnockoffPair& pair);

std::string format_double(double v);

// FNV-1a over a string; used as the content hash for resolved configs.
std::uint64_t content_hash(const std::string& text);
std::string content_hash_hex(const std::string& text);

}  // namespace knockoff::io
