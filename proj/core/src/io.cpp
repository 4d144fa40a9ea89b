#include "intformer/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "intformer/errors.hpp"
#include "intformer/util.hpp"

namespace intformer {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

// Reads lines, exposing a leading "# config_hash=..." comment if present.
std::vector<std::string> read_csv_lines(const std::string& path,
                                        std::string* config_hash) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '#') {
      constexpr const char* kPrefix = "# config_hash=";
      if (config_hash != nullptr && line.rfind(kPrefix, 0) == 0) {
        *config_hash = line.substr(std::strlen(kPrefix));
      }
      continue;
    }
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

json tensor_to_json(const Tensor& t) {
  json j;
  j["shape"] = t.shape();
  j["data"] = t.data();
  return j;
}

Tensor tensor_from_json(const json& j) {
  std::vector<std::size_t> shape = j.at("shape").get<std::vector<std::size_t>>();
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  return Tensor(std::move(shape), std::move(data));
}

std::string family_to_string(FeatureDistribution::Family family) {
  using Family = FeatureDistribution::Family;
  switch (family) {
    case Family::kTruncatedNormal: return "truncated_normal";
    case Family::kMaxOffset: return "max_offset";
    case Family::kZeroInflatedPoisson: return "zero_inflated_poisson";
    case Family::kBetaScaled: return "beta_scaled";
    case Family::kBernoulli: return "bernoulli";
    case Family::kZeroInflatedExp: return "zero_inflated_exp";
  }
  throw ConfigError("invalid distribution family");
}

FeatureDistribution::Family family_from_string(const std::string& name) {
  using Family = FeatureDistribution::Family;
  if (name == "truncated_normal") return Family::kTruncatedNormal;
  if (name == "max_offset") return Family::kMaxOffset;
  if (name == "zero_inflated_poisson") return Family::kZeroInflatedPoisson;
  if (name == "beta_scaled") return Family::kBetaScaled;
  if (name == "bernoulli") return Family::kBernoulli;
  if (name == "zero_inflated_exp") return Family::kZeroInflatedExp;
  throw ConfigError("unknown distribution family: " + name);
}

void append_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void append_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void append_i64(std::string& out, std::int64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void append_string(std::string& out, const std::string& s) {
  append_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

void append_double(std::string& out, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

struct ByteReader {
  const std::string& bytes;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw IoError("truncated windows file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::int64_t i64() {
    need(8);
    std::int64_t v;
    std::memcpy(&v, bytes.data() + pos, 8);
    pos += 8;
    return v;
  }
  double f64() {
    need(8);
    double v;
    std::memcpy(&v, bytes.data() + pos, 8);
    pos += 8;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = bytes.substr(pos, n);
    pos += n;
    return s;
  }
};

constexpr const char* kWindowsMagic = "ITFWIN01";

}  // namespace

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string file_hash_hex(const std::string& path) {
  return to_hex64(fnv1a64(read_file_bytes(path)));
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void write_snapshots_csv(const std::string& path,
                         const std::vector<IntersectionSnapshot>& snapshots,
                         const std::string& config_hash) {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << "\n";
  os << "intersection_id,timestamp,approach";
  for (const std::string& name : approach_row_feature_names()) os << ',' << name;
  os << "\n";
  for (const auto& s : snapshots) {
    os << s.intersection_id << ',' << iso8601_from_minutes(s.timestamp) << ','
       << leg_to_string(s.approach);
    for (double v : flatten_features(s)) os << ',' << format_double(v);
    os << "\n";
  }
  write_file_bytes(path, os.str());
}

std::vector<IntersectionSnapshot> read_snapshots_csv(const std::string& path,
                                                     std::string* config_hash) {
  const std::vector<std::string> lines = read_csv_lines(path, config_hash);
  if (lines.empty()) throw IoError("empty snapshots file: " + path);
  std::vector<IntersectionSnapshot> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 3 + kApproachRowWidth) {
      throw IoError("bad snapshot row width in " + path);
    }
    IntersectionSnapshot s;
    s.intersection_id = fields[0];
    s.timestamp = minutes_from_iso8601(fields[1]);
    s.approach = leg_from_string(fields[2]);
    std::vector<double> values(kApproachRowWidth);
    for (std::size_t j = 0; j < kApproachRowWidth; ++j) {
      values[j] = std::stod(fields[3 + j]);
    }
    unflatten_features(values, s.features, s.weather);
    out.push_back(std::move(s));
  }
  return out;
}

void write_crashes_csv(const std::string& path, const std::vector<CrashEvent>& crashes,
                       const std::string& config_hash) {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << "\n";
  os << "intersection_id,timestamp,zone,approach\n";
  for (const auto& c : crashes) {
    os << c.intersection_id << ',' << iso8601_from_minutes(c.timestamp) << ','
       << zone_to_string(c.zone) << ','
       << (c.approach.has_value() ? leg_to_string(*c.approach) : "") << "\n";
  }
  write_file_bytes(path, os.str());
}

std::vector<CrashEvent> read_crashes_csv(const std::string& path,
                                         std::string* config_hash) {
  const std::vector<std::string> lines = read_csv_lines(path, config_hash);
  if (lines.empty()) throw IoError("empty crashes file: " + path);
  std::vector<CrashEvent> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 4) throw IoError("bad crash row in " + path);
    CrashEvent c;
    c.intersection_id = fields[0];
    c.timestamp = minutes_from_iso8601(fields[1]);
    c.zone = zone_from_string(fields[2]);
    if (!fields[3].empty()) c.approach = leg_from_string(fields[3]);
    c.validate();
    out.push_back(std::move(c));
  }
  return out;
}

void write_windows_file(const std::string& path, const WindowsFile& file) {
  std::string bytes;
  bytes.append(kWindowsMagic);
  append_string(bytes, file.config_hash);
  append_string(bytes, zone_to_string(file.zone));
  append_u32(bytes, static_cast<std::uint32_t>(file.timesteps));
  append_u32(bytes, static_cast<std::uint32_t>(file.column_names.size()));
  for (const std::string& name : file.column_names) append_string(bytes, name);
  append_u64(bytes, file.windows.size());
  for (const auto& w : file.windows) {
    bytes.push_back(static_cast<char>(w.label));
    append_string(bytes, w.intersection_id);
    append_string(bytes, w.approach_label);
    append_i64(bytes, w.end_timestamp);
    for (double v : w.features.data()) append_double(bytes, v);
  }
  write_file_bytes(path, bytes);
}

WindowsFile read_windows_file(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 8 || bytes.compare(0, 8, kWindowsMagic) != 0) {
    throw IoError("not a windows file: " + path);
  }
  ByteReader r{bytes, 8};
  WindowsFile file;
  file.config_hash = r.str();
  file.zone = zone_from_string(r.str());
  file.timesteps = static_cast<int>(r.u32());
  const std::uint32_t columns = r.u32();
  for (std::uint32_t i = 0; i < columns; ++i) file.column_names.push_back(r.str());
  const std::uint64_t count = r.u64();
  file.windows.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    LabeledWindow w;
    r.need(1);
    w.label = static_cast<int>(bytes[r.pos++]);
    w.intersection_id = r.str();
    w.approach_label = r.str();
    w.end_timestamp = r.i64();
    Tensor features({static_cast<std::size_t>(file.timesteps), columns});
    for (double& v : features.data()) v = r.f64();
    w.features = std::move(features);
    file.windows.push_back(std::move(w));
  }
  return file;
}

void write_selection_json(const std::string& path, const SelectionResult& selection,
                          Zone zone, const std::string& config_hash) {
  json j;
  j["config_hash"] = config_hash;
  j["zone"] = zone_to_string(zone);
  j["threshold"] = selection.threshold;
  json features = json::array();
  for (std::size_t i = 0; i < selection.feature_names.size(); ++i) {
    features.push_back({{"name", selection.feature_names[i]},
                        {"importance", selection.importances[i]},
                        {"kept", static_cast<bool>(selection.kept[i])}});
  }
  j["features"] = features;
  j["kept_count"] = selection.kept_indices.size();
  write_file_bytes(path, j.dump(2) + "\n");
}

void write_losses_csv(const std::string& path, const std::vector<double>& losses,
                      const std::string& config_hash) {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << "\n";
  os << "epoch,mean_train_loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    os << (i + 1) << ',' << format_double(losses[i]) << "\n";
  }
  write_file_bytes(path, os.str());
}

void write_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  json j;
  j["config_hash"] = checkpoint.config_hash;
  j["family"] = checkpoint.family;
  j["timesteps"] = checkpoint.timesteps;
  j["input_features"] = checkpoint.input_features;
  j["zone"] = checkpoint.zone;
  j["stacking"] = checkpoint.stacking;
  j["hyper"] = {{"time_k", checkpoint.hyper.time_k},
                {"d_model", checkpoint.hyper.d_model},
                {"heads", checkpoint.hyper.heads},
                {"encoders", checkpoint.hyper.encoders},
                {"d_ff", checkpoint.hyper.d_ff},
                {"dropout", checkpoint.hyper.dropout},
                {"lstm_hidden", checkpoint.hyper.lstm_hidden},
                {"cnn_kernel", checkpoint.hyper.cnn_kernel},
                {"cnn_channels", checkpoint.hyper.cnn_channels}};
  json params = json::object();
  for (const auto& [name, tensor] : checkpoint.params) {
    params[name] = tensor_to_json(tensor);
  }
  j["params"] = params;
  j["normalizer"] = {{"mean", checkpoint.normalizer.mean},
                     {"stddev", checkpoint.normalizer.stddev}};
  write_file_bytes(path, j.dump(2) + "\n");
}

Checkpoint read_checkpoint(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::parse_error& e) {
    throw IoError("unparseable checkpoint " + path + ": " + e.what());
  }
  Checkpoint c;
  c.config_hash = j.at("config_hash").get<std::string>();
  c.family = j.at("family").get<std::string>();
  c.timesteps = j.at("timesteps").get<int>();
  c.input_features = j.at("input_features").get<int>();
  c.zone = j.at("zone").get<std::string>();
  c.stacking = j.at("stacking").get<int>();
  const json& h = j.at("hyper");
  c.hyper.time_k = h.at("time_k").get<int>();
  c.hyper.d_model = h.at("d_model").get<int>();
  c.hyper.heads = h.at("heads").get<int>();
  c.hyper.encoders = h.at("encoders").get<int>();
  c.hyper.d_ff = h.at("d_ff").get<int>();
  c.hyper.dropout = h.at("dropout").get<double>();
  c.hyper.lstm_hidden = h.at("lstm_hidden").get<int>();
  c.hyper.cnn_kernel = h.at("cnn_kernel").get<int>();
  c.hyper.cnn_channels = h.at("cnn_channels").get<int>();
  for (const auto& [name, value] : j.at("params").items()) {
    c.params.emplace(name, tensor_from_json(value));
  }
  c.normalizer.mean = j.at("normalizer").at("mean").get<std::vector<double>>();
  c.normalizer.stddev = j.at("normalizer").at("stddev").get<std::vector<double>>();
  return c;
}

std::unique_ptr<Model> model_from_checkpoint(const Checkpoint& checkpoint) {
  std::unique_ptr<Model> model = make_model(
      checkpoint.family, checkpoint.timesteps, checkpoint.input_features,
      checkpoint.hyper, 0);
  auto& params = model->params();
  if (params.size() != checkpoint.params.size()) {
    throw IoError("checkpoint parameter roster does not match model family");
  }
  for (auto& [name, tensor] : params) {
    auto it = checkpoint.params.find(name);
    if (it == checkpoint.params.end()) {
      throw IoError("checkpoint missing parameter " + name);
    }
    if (!it->second.same_shape(tensor)) {
      throw IoError("checkpoint parameter " + name + " has shape " +
                    it->second.shape_string() + ", expected " + tensor.shape_string());
    }
    tensor = it->second;
  }
  return model;
}

void write_attributions_csv(const std::string& path, const AttributionReport& report,
                            const std::string& config_hash) {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << "\n";
  os << "timestep,feature,window_id,shap_value,feature_value\n";
  for (int t = 0; t < report.timesteps; ++t) {
    for (std::size_t f = 0; f < report.feature_names.size(); ++f) {
      for (std::size_t w = 0; w < report.window_ids.size(); ++w) {
        os << t << ',' << report.feature_names[f] << ',' << report.window_ids[w] << ','
           << format_double(
                  report.shap_values[w].at(static_cast<std::size_t>(t), f))
           << ','
           << format_double(
                  report.feature_values[w].at(static_cast<std::size_t>(t), f))
           << "\n";
      }
    }
  }
  write_file_bytes(path, os.str());
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows,
                       const std::string& config_hash) {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << "\n";
  os << "timestep,rank,feature,mean_abs_shap,window_id,shap_value,feature_value\n";
  for (const auto& row : rows) {
    os << row.timestep << ',' << row.rank << ',' << row.feature << ','
       << format_double(row.mean_abs_shap) << ',' << row.window_id << ','
       << format_double(row.shap_value) << ',' << format_double(row.feature_value)
       << "\n";
  }
  write_file_bytes(path, os.str());
}

FeatureCalibration calibration_from_json_file(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file_bytes(path));
  } catch (const json::parse_error& e) {
    throw IoError("unparseable calibration " + path + ": " + e.what());
  }
  FeatureCalibration c;
  for (const auto& [name, spec] : j.items()) {
    FeatureDistribution d;
    d.family = family_from_string(spec.at("family").get<std::string>());
    d.mean = spec.at("mean").get<double>();
    d.stddev = spec.at("stddev").get<double>();
    d.min = spec.at("min").get<double>();
    d.max = spec.at("max").get<double>();
    c.features[name] = d;
  }
  c.validate();
  return c;
}

void write_calibration_json(const std::string& path,
                            const FeatureCalibration& calibration) {
  json j = json::object();
  for (const auto& [name, d] : calibration.features) {
    j[name] = {{"family", family_to_string(d.family)},
               {"mean", d.mean},
               {"stddev", d.stddev},
               {"min", d.min},
               {"max", d.max}};
  }
  write_file_bytes(path, j.dump(2) + "\n");
}

}  // namespace intformer
