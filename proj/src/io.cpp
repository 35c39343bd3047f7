#include "knockoff/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace knockoff::io {

using nlohmann::json;

namespace {

json dense_to_json(const nn::DenseLayer& d) {
  json j;
  j["type"] = "dense";
  j["in"] = d.in_width();
  j["out"] = d.out_width();
  j["activation"] = nn::to_string(d.activation);
  j["l2_penalty"] = d.l2_penalty;
  j["softmax_group_size"] = d.softmax_group_size;
  std::vector<double> w(d.weights.data(), d.weights.data() + d.weights.size());
  j["weights"] = w;  // column-major flatten of the out x in matrix
  std::vector<double> b(d.bias.data(), d.bias.data() + d.bias.size());
  j["bias"] = b;
  return j;
}

json bn_to_json(const nn::BatchNormLayer& bn) {
  json j;
  j["type"] = "batch_norm";
  j["width"] = bn.width();
  j["momentum"] = bn.momentum;
  j["epsilon"] = bn.epsilon;
  auto vec = [](const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  j["running_mean"] = vec(bn.running_mean);
  j["running_var"] = vec(bn.running_var);
  j["scale"] = vec(bn.scale);
  j["shift"] = vec(bn.shift);
  return j;
}

Vector json_to_vector(const json& j, Index expected, const std::string& what) {
  auto v = j.get<std::vector<double>>();
  if (expected >= 0 && static_cast<Index>(v.size()) != expected)
    throw ParseError("checkpoint: bad length for " + what);
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

json mlp_to_json(const nn::MlpModel& model) {
  json j;
  j["input_width"] = model.input_width;
  j["layers"] = json::array();
  for (const nn::Layer& l : model.layers) {
    if (const auto* d = std::get_if<nn::DenseLayer>(&l))
      j["layers"].push_back(dense_to_json(*d));
    else
      j["layers"].push_back(bn_to_json(std::get<nn::BatchNormLayer>(l)));
  }
  return j;
}

nn::MlpModel mlp_from_json(const json& j) {
  nn::MlpModel m;
  m.input_width = j.at("input_width").get<Index>();
  for (const json& lj : j.at("layers")) {
    const std::string type = lj.at("type").get<std::string>();
    if (type == "dense") {
      nn::DenseLayer d;
      const Index in = lj.at("in").get<Index>();
      const Index out = lj.at("out").get<Index>();
      d.activation = nn::activation_from_string(lj.at("activation").get<std::string>());
      d.l2_penalty = lj.at("l2_penalty").get<double>();
      d.softmax_group_size = lj.at("softmax_group_size").get<Index>();
      Vector w = json_to_vector(lj.at("weights"), in * out, "weights");
      d.weights = Eigen::Map<const Matrix>(w.data(), out, in);
      d.bias = json_to_vector(lj.at("bias"), out, "bias");
      m.layers.emplace_back(std::move(d));
    } else if (type == "batch_norm") {
      nn::BatchNormLayer bn;
      const Index width = lj.at("width").get<Index>();
      bn.momentum = lj.at("momentum").get<double>();
      bn.epsilon = lj.at("epsilon").get<double>();
      bn.running_mean = json_to_vector(lj.at("running_mean"), width, "running_mean");
      bn.running_var = json_to_vector(lj.at("running_var"), width, "running_var");
      bn.scale = json_to_vector(lj.at("scale"), width, "scale");
      bn.shift = json_to_vector(lj.at("shift"), width, "shift");
      m.layers.emplace_back(std::move(bn));
    } else {
      throw ParseError("checkpoint: unknown layer type " + type);
    }
  }
  m.check_wiring();
  return m;
}

void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  json j;
  in >> j;
  return j;
}

void save_mlp_checkpoint(const std::filesystem::path& path,
                         const nn::MlpModel& model, std::uint64_t seed) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = "mlp_checkpoint";
  j["seed"] = seed;
  j["model"] = mlp_to_json(model);
  save_json(path, j);
}

MlpCheckpoint load_mlp_checkpoint(const std::filesystem::path& path) {
  json j = load_json(path);
  if (!j.contains("format_version"))
    throw ParseError("checkpoint missing format_version: " + path.string());
  if (j["format_version"].get<int>() != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version in " + path.string());
  MlpCheckpoint c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.model = mlp_from_json(j.at("model"));
  return c;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m,
                      const std::vector<std::string>& col_names,
                      const std::map<std::string, std::string>& header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path.string());
  for (const auto& [k, v] : header) out << "# " << k << ": " << v << "\n";
  for (Index j = 0; j < m.cols(); ++j) {
    if (j) out << ",";
    out << (j < static_cast<Index>(col_names.size())
                ? col_names[static_cast<std::size_t>(j)]
                : "c" + std::to_string(j));
  }
  out << "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvMatrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path.string());
  CsvMatrix res;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::vector<double>> rows;
  bool have_names = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      const auto colon = body.find(':');
      if (colon != std::string::npos) {
        std::string key = body.substr(0, colon);
        std::string val = body.substr(colon + 1);
        auto trim = [](std::string& s) {
          while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
          while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
        };
        trim(key);
        trim(val);
        res.header[key] = val;
      }
      continue;
    }
    auto fields = split_csv_line(line);
    if (!have_names) {
      res.col_names = fields;
      have_names = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(f, &used));
        if (used != f.size()) throw std::invalid_argument(f);
      } catch (const std::exception&) {
        throw ParseError("bad numeric field '" + f + "' at " + path.string() + ":" +
                         std::to_string(lineno));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("ragged row at " + path.string() + ":" + std::to_string(lineno));
    rows.push_back(std::move(row));
  }
  if (!have_names) throw ParseError("empty csv: " + path.string());
  const Index n = static_cast<Index>(rows.size());
  const Index p = n > 0 ? static_cast<Index>(rows.front().size())
                        : static_cast<Index>(res.col_names.size());
  res.values.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j)
      res.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return res;
}

void write_data_csv(const std::filesystem::path& path, const DataMatrix& d,
                    std::map<std::string, std::string> header) {
  d.check_consistent();
  std::string kinds;
  for (std::size_t j = 0; j < d.kinds.size(); ++j) {
    if (j) kinds += ",";
    kinds += to_string(d.kinds[j]);
  }
  header["kinds"] = kinds;
  write_matrix_csv(path, d.values, d.col_names, header);
}

DataMatrix read_data_csv(const std::filesystem::path& path) {
  CsvMatrix c = read_matrix_csv(path);
  DataMatrix d;
  d.values = std::move(c.values);
  d.col_names = std::move(c.col_names);
  const auto it = c.header.find("kinds");
  if (it == c.header.end()) {
    d.kinds.assign(static_cast<std::size_t>(d.values.cols()), ColumnKind::Continuous);
  } else {
    for (const auto& k : split_csv_line(it->second))
      d.kinds.push_back(column_kind_from_string(k));
  }
  d.check_consistent();
  return d;
}

void write_knockoff_csv(const std::filesystem::path& path, const KnockoffPair& pair) {
  std::map<std::string, std::string> header(pair.provenance.begin(),
                                            pair.provenance.end());
  header["generator"] = pair.generator;
  std::vector<std::string> names;
  for (Index j = 0; j < pair.knockoff.cols(); ++j)
    names.push_back("xk" + std::to_string(j));
  write_matrix_csv(path, pair.knockoff, names, header);
}

std::uint64_t content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string content_hash_hex(const std::string& text) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(content_hash(text)));
  return buf;
}

}  // namespace knockoff::io
