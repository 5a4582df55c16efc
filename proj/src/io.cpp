#include "mepath/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "mepath/error.hpp"
#include "mepath/penalty.hpp"

namespace mepath::io {

namespace {

using nlohmann::json;

struct Line {
  std::size_t number;
  std::vector<std::string_view> fields;
};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Non-empty, non-comment lines with their 1-based line numbers.
std::vector<Line> csv_lines(std::string_view text) {
  std::vector<Line> out;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty() && line.front() != '#') out.push_back({number, split_fields(line)});
    start = end + 1;
  }
  return out;
}

std::string where(std::string_view file, std::size_t line) {
  return std::string(file) + " line " + std::to_string(line);
}

double parse_real(std::string_view text, std::string_view file, std::size_t line) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw Error(ErrorCode::kParseError,
                where(file, line) + ": '" + std::string(text) + "' is not a number");
  }
  return value;
}

std::string hex_sha256(std::string_view text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

json config_to_json(const SolverConfig& c) {
  json j;
  j["loss"] = loss_name(c.family);
  j["penalty"] = c.mode ? json(penalty_name(*c.mode)) : json("auto");
  j["kappa"] = c.kappa;
  j["alpha"] = c.alpha ? json(*c.alpha) : json("auto");
  j["iters"] = c.max_iters;
  j["t-max"] = c.t_max ? json(*c.t_max) : json(nullptr);
  j["record-every"] = c.record_every;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["tol-spectral"] = c.tol_spectral;
  return j;
}

SolverConfig config_from_json(const json& j) {
  SolverConfig c;
  c.family = parse_loss(j.at("loss").get<std::string>());
  const std::string penalty = j.at("penalty").get<std::string>();
  if (penalty != "auto") c.mode = parse_penalty(penalty);
  c.kappa = j.at("kappa").get<double>();
  if (!j.at("alpha").is_string()) c.alpha = j.at("alpha").get<double>();
  c.max_iters = j.at("iters").get<std::size_t>();
  if (!j.at("t-max").is_null()) c.t_max = j.at("t-max").get<double>();
  c.record_every = j.at("record-every").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<std::size_t>();
  c.tol_spectral = j.at("tol-spectral").get<double>();
  return c;
}

json users_to_json(const ModelState& s, bool with_dual) {
  json users = json::array();
  for (std::size_t u = 0; u < s.n_users; ++u) {
    json row;
    const auto xi = s.xi_of(u);
    row["xi"] = std::vector<double>(xi.begin(), xi.end());
    row["gamma"] = s.gamma[u];
    if (with_dual) {
      const auto z = s.z_xi_of(u);
      row["z_xi"] = std::vector<double>(z.begin(), z.end());
      row["z_gamma"] = s.z_gamma[u];
    }
    users.push_back(std::move(row));
  }
  return users;
}

ModelState state_from_json(const json& j, std::size_t n_users, std::size_t dim) {
  ModelState s = ModelState::zeros(n_users, dim);
  s.t = j.at("t").get<double>();
  s.eta = j.at("eta").get<std::vector<double>>();
  const json& users = j.at("users");
  if (s.eta.size() != dim || users.size() != n_users) {
    throw Error(ErrorCode::kParseError, "state block sizes do not match header");
  }
  for (std::size_t u = 0; u < n_users; ++u) {
    const json& row = users[u];
    const auto xi = row.at("xi").get<std::vector<double>>();
    const auto z = row.at("z_xi").get<std::vector<double>>();
    if (xi.size() != dim || z.size() != dim) {
      throw Error(ErrorCode::kParseError, "per-user block size does not match header");
    }
    std::copy(xi.begin(), xi.end(), s.xi_of(u).begin());
    std::copy(z.begin(), z.end(), s.z_xi_of(u).begin());
    s.gamma[u] = row.at("gamma").get<double>();
    s.z_gamma[u] = row.at("z_gamma").get<double>();
  }
  return s;
}

json header_for(std::string_view kind, const ComparisonDataset& dataset) {
  json h;
  h["format_version"] = kFormatVersion;
  h["kind"] = kind;
  h["dataset_hash"] = dataset_hash(dataset);
  h["n_users"] = dataset.n_users();
  h["dim"] = dataset.dim();
  h["users"] = dataset.user_ids();
  h["items"] = dataset.item_ids();
  return h;
}

void check_header(const json& h, std::string_view kind,
                  const ComparisonDataset& dataset) {
  if (h.value("format_version", 0) != kFormatVersion) {
    throw Error(ErrorCode::kParseError, "unsupported format_version");
  }
  if (h.value("kind", std::string()) != kind) {
    throw Error(ErrorCode::kParseError,
                "expected a '" + std::string(kind) + "' file");
  }
  const std::string expected = dataset_hash(dataset);
  const std::string found = h.at("dataset_hash").get<std::string>();
  if (found != expected) {
    throw Error(ErrorCode::kHashMismatch,
                "file was produced from dataset " + found +
                    " but the given dataset hashes to " + expected);
  }
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

ComparisonDataset parse_dataset(std::string_view comparisons,
                                std::optional<std::string_view> features) {
  const auto rows = csv_lines(comparisons);
  if (rows.empty()) {
    throw Error(ErrorCode::kHeaderMismatch, "comparisons file is empty");
  }
  const auto& header = rows.front().fields;
  const bool has_weight = header.size() == 5;
  const std::vector<std::string_view> expected = {"user", "left", "right", "y", "weight"};
  if (!(header.size() == 4 || header.size() == 5) ||
      !std::equal(header.begin(), header.end(), expected.begin())) {
    throw Error(ErrorCode::kHeaderMismatch,
                "comparisons header must be user,left,right,y[,weight]");
  }

  // Item index space.
  std::map<std::string, std::size_t, std::less<>> item_index;
  FeatureMatrix matrix;
  std::vector<std::string> item_ids;
  if (features) {
    const auto frows = csv_lines(*features);
    if (frows.empty()) {
      throw Error(ErrorCode::kHeaderMismatch, "features file is empty");
    }
    const auto& fh = frows.front().fields;
    bool ok = fh.size() >= 2 && fh[0] == "item";
    for (std::size_t j = 1; ok && j < fh.size(); ++j) {
      ok = fh[j] == "f" + std::to_string(j - 1);
    }
    if (!ok) {
      throw Error(ErrorCode::kHeaderMismatch,
                  "features header must be item,f0,...,f{d-1}");
    }
    const std::size_t dim = fh.size() - 1;
    std::map<std::string, std::vector<double>, std::less<>> by_id;
    for (std::size_t r = 1; r < frows.size(); ++r) {
      const Line& line = frows[r];
      if (line.fields.size() != dim + 1) {
        throw Error(ErrorCode::kParseError,
                    where("features", line.number) + ": expected " +
                        std::to_string(dim + 1) + " fields");
      }
      std::vector<double> values(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        values[j] = parse_real(line.fields[j + 1], "features", line.number);
      }
      const std::string id(line.fields[0]);
      if (!by_id.emplace(id, std::move(values)).second) {
        throw Error(ErrorCode::kDuplicateFeatureRow,
                    where("features", line.number) + ": item '" + id +
                        "' appears twice");
      }
    }
    std::vector<double> data;
    data.reserve(by_id.size() * dim);
    for (auto& [id, values] : by_id) {
      item_index.emplace(id, item_ids.size());
      item_ids.push_back(id);
      data.insert(data.end(), values.begin(), values.end());
    }
    matrix = FeatureMatrix::dense(item_ids.size(), dim, std::move(data));
  } else {
    std::set<std::string, std::less<>> ids;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (rows[r].fields.size() >= 3) {
        ids.emplace(rows[r].fields[1]);
        ids.emplace(rows[r].fields[2]);
      }
    }
    for (const auto& id : ids) {
      item_index.emplace(id, item_ids.size());
      item_ids.push_back(id);
    }
    matrix = FeatureMatrix::identity(item_ids.size());
  }

  std::vector<ComparisonRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const Line& line = rows[r];
    if (line.fields.size() != header.size()) {
      throw Error(ErrorCode::kParseError,
                  where("comparisons", line.number) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    ComparisonRecord rec;
    rec.user = std::string(line.fields[0]);
    for (int side = 0; side < 2; ++side) {
      const auto id = line.fields[1 + side];
      const auto it = item_index.find(id);
      if (it == item_index.end()) {
        throw Error(ErrorCode::kParseError,
                    where("comparisons", line.number) + ": item '" +
                        std::string(id) + "' has no feature row");
      }
      (side == 0 ? rec.left : rec.right) = it->second;
    }
    rec.outcome = parse_real(line.fields[3], "comparisons", line.number);
    if (has_weight) {
      rec.weight = parse_real(line.fields[4], "comparisons", line.number);
    }
    if (rec.left == rec.right) {
      throw Error(ErrorCode::kParseError,
                  where("comparisons", line.number) + ": item compared with itself");
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "comparisons file has no records");
  }
  return build_dataset(records, std::move(matrix), std::move(item_ids));
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kParseError, "cannot read '" + file.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& file, std::string_view text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoError, "cannot write '" + file.string() + "'");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw Error(ErrorCode::kIoError, "write to '" + file.string() + "' failed");
  }
}

ComparisonDataset load_dataset(const std::filesystem::path& comparisons_file,
                               const std::optional<std::filesystem::path>& features_file) {
  const std::string comparisons = read_file(comparisons_file);
  if (!features_file) return parse_dataset(comparisons, std::nullopt);
  const std::string features = read_file(*features_file);
  return parse_dataset(comparisons, std::string_view(features));
}

std::string comparisons_csv(const ComparisonDataset& dataset) {
  const auto weights = dataset.weight();
  const bool weighted =
      std::any_of(weights.begin(), weights.end(), [](double w) { return w != 1.0; });
  std::string out = weighted ? "user,left,right,y,weight\n" : "user,left,right,y\n";
  const auto& items = dataset.item_ids();
  for (const ComparisonRecord& r : dataset.records()) {
    out += r.user;
    out += ',';
    out += items[r.left];
    out += ',';
    out += items[r.right];
    out += ',';
    out += format_real(r.outcome);
    if (weighted) {
      out += ',';
      out += format_real(r.weight);
    }
    out += '\n';
  }
  return out;
}

std::optional<std::string> features_csv(const ComparisonDataset& dataset) {
  const FeatureMatrix& phi = dataset.features();
  if (phi.is_identity()) return std::nullopt;
  std::string out = "item";
  for (std::size_t j = 0; j < phi.cols(); ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    out += dataset.item_ids()[i];
    for (std::size_t j = 0; j < phi.cols(); ++j) {
      out += ',';
      out += format_real(phi.at(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_dataset(const ComparisonDataset& dataset,
                  const std::filesystem::path& comparisons_file,
                  const std::optional<std::filesystem::path>& features_file) {
  write_file(comparisons_file, comparisons_csv(dataset));
  const auto features = features_csv(dataset);
  if (features) {
    if (!features_file) {
      throw Error(ErrorCode::kInvalidConfig,
                  "dataset has explicit features but no features file was given");
    }
    write_file(*features_file, *features);
  }
}

std::string id_map_csv(const ComparisonDataset& dataset) {
  std::string out = "kind,index,id\n";
  for (std::size_t u = 0; u < dataset.n_users(); ++u) {
    out += "user," + std::to_string(u) + "," + dataset.user_ids()[u] + "\n";
  }
  for (std::size_t i = 0; i < dataset.n_items(); ++i) {
    out += "item," + std::to_string(i) + "," + dataset.item_ids()[i] + "\n";
  }
  return out;
}

std::string dataset_hash(const ComparisonDataset& dataset) {
  std::string canonical = "comparisons\n" + comparisons_csv(dataset);
  const auto features = features_csv(dataset);
  if (features) {
    canonical += "features\n" + *features;
  } else {
    canonical += "identity\n";
    for (const auto& id : dataset.item_ids()) canonical += id + "\n";
  }
  return hex_sha256(canonical);
}

std::string serialize_path(const RegularizationPath& path,
                           const ComparisonDataset& dataset) {
  json header = header_for("path", dataset);
  header["config"] = config_to_json(path.config);
  header["penalty"] = penalty_name(path.mode);
  header["alpha"] = path.alpha;
  header["spectral_norm"] = path.spectral_norm;
  header["iterations"] = path.iterations;
  std::string out = header.dump() + "\n";

  for (const PathPoint& p : path.points) {
    json row;
    row["kind"] = "snapshot";
    row["k"] = p.iteration;
    row["t"] = p.state.t;
    row["eta"] = p.state.eta;
    row["users"] = users_to_json(p.state, true);
    out += row.dump() + "\n";
  }

  json events = json::array();
  for (const SupportEvent& e : path.events) {
    json row;
    row["t"] = e.t;
    row["k"] = e.iteration;
    row["block"] = e.block == BlockKind::kDeviation ? "deviation" : "bias";
    row["user"] = dataset.user_ids().at(e.user);
    row["direction"] = e.entered ? "entered" : "left";
    events.push_back(std::move(row));
  }
  json tail;
  tail["kind"] = "events";
  tail["events"] = std::move(events);
  out += tail.dump() + "\n";
  return out;
}

RegularizationPath parse_path(std::string_view text,
                              const ComparisonDataset& dataset) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    if (end > start) lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.size() < 2) {
    throw Error(ErrorCode::kParseError, "path file needs a header and snapshots");
  }
  const json header = parse_json(lines.front(), "path header");
  check_header(header, "path", dataset);

  RegularizationPath path;
  try {
    path.config = config_from_json(header.at("config"));
    path.mode = parse_penalty(header.at("penalty").get<std::string>());
    path.alpha = header.at("alpha").get<double>();
    path.spectral_norm = header.at("spectral_norm").get<double>();
    path.iterations = header.at("iterations").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("path header: ") + e.what());
  }

  std::map<std::string, std::size_t, std::less<>> user_index;
  for (std::size_t u = 0; u < dataset.n_users(); ++u) {
    user_index.emplace(dataset.user_ids()[u], u);
  }
  bool saw_events = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const json row = parse_json(lines[i], "path line " + std::to_string(i + 1));
    try {
      const std::string kind = row.at("kind").get<std::string>();
      if (kind == "snapshot") {
        PathPoint p;
        p.iteration = row.at("k").get<std::size_t>();
        p.state = state_from_json(row, dataset.n_users(), dataset.dim());
        if (!path.points.empty() && !(p.state.t > path.points.back().state.t)) {
          throw Error(ErrorCode::kParseError,
                      "path snapshots must have strictly increasing t");
        }
        ModelState check = p.state;
        shrink_state(path.mode, path.config.kappa, check);
        if (check.xi != p.state.xi || check.gamma != p.state.gamma) {
          throw Error(ErrorCode::kParseError,
                      "snapshot at t = " + format_real(p.state.t) +
                          " is not the shrinkage of its dual block");
        }
        path.points.push_back(std::move(p));
      } else if (kind == "events") {
        saw_events = true;
        for (const json& e : row.at("events")) {
          SupportEvent ev;
          ev.t = e.at("t").get<double>();
          ev.iteration = e.at("k").get<std::size_t>();
          ev.block = e.at("block").get<std::string>() == "deviation"
                         ? BlockKind::kDeviation
                         : BlockKind::kBias;
          const auto it = user_index.find(e.at("user").get<std::string>());
          if (it == user_index.end()) {
            throw Error(ErrorCode::kParseError, "event names an unknown user");
          }
          ev.user = it->second;
          ev.entered = e.at("direction").get<std::string>() == "entered";
          path.events.push_back(ev);
        }
      } else {
        throw Error(ErrorCode::kParseError, "unknown path line kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError,
                  "path line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (path.points.empty() || !saw_events) {
    throw Error(ErrorCode::kParseError, "path file is truncated");
  }
  return path;
}

void save_path(const RegularizationPath& path, const ComparisonDataset& dataset,
               const std::filesystem::path& file) {
  write_file(file, serialize_path(path, dataset));
}

RegularizationPath load_path(const std::filesystem::path& file,
                             const ComparisonDataset& dataset) {
  return parse_path(read_file(file), dataset);
}

std::string serialize_state(const ModelState& state,
                            const ComparisonDataset& dataset) {
  state.check_compatible(dataset);
  json j = header_for("state", dataset);
  j["t"] = state.t;
  j["eta"] = state.eta;
  j["users"] = users_to_json(state, true);
  return j.dump() + "\n";
}

ModelState parse_state(std::string_view text, const ComparisonDataset& dataset) {
  const json j = parse_json(text, "state file");
  check_header(j, "state", dataset);
  try {
    return state_from_json(j, dataset.n_users(), dataset.dim());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("state file: ") + e.what());
  }
}

void save_state(const ModelState& state, const ComparisonDataset& dataset,
                const std::filesystem::path& file) {
  write_file(file, serialize_state(state, dataset));
}

ModelState load_state(const std::filesystem::path& file,
                      const ComparisonDataset& dataset) {
  return parse_state(read_file(file), dataset);
}

std::string cv_report_csv(const CvReport& report) {
  std::string out = "# format_version: " + std::to_string(kFormatVersion) + "\nfold";
  for (double t : report.t_grid) out += "," + format_real(t);
  out += '\n';
  for (std::size_t f = 0; f < report.errors.size(); ++f) {
    out += std::to_string(f);
    for (double e : report.errors[f]) out += "," + format_real(e);
    out += '\n';
  }
  out += "mean";
  for (double e : report.mean_errors) out += "," + format_real(e);
  out += '\n';
  out += "summary,t_cv=" + format_real(report.t_cv) +
         ",index=" + std::to_string(report.t_cv_index) +
         ",mean_error=" + format_real(report.mean_errors.at(report.t_cv_index)) +
         ",tie_policy_applied=" + (report.tie_policy_applied ? "1" : "0") + "\n";
  return out;
}

}  // namespace mepath::io
