#include "anisoflow/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "anisoflow/error.hpp"

namespace anisoflow {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ',' || s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) return std::nullopt;
  }
  return value;
}

template <typename T>
std::optional<std::vector<T>> parse_list(std::string_view s) {
  std::vector<T> out;
  for (auto item : split_list(s)) {
    auto v = parse_number<T>(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

class ConfigParser {
 public:
  RunConfig parse(std::string_view text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty() || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          error(line_no, "malformed section header");
          continue;
        }
        section_ = std::string(trim(line.substr(1, line.size() - 2)));
        if (section_ != "grid" && section_ != "solver" && section_ != "io") {
          error(line_no, "unknown section [" + section_ + "]");
        }
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        error(line_no, "expected key = value");
        continue;
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (section_.empty()) {
        error(line_no, "key '" + key + "' appears before any section");
        continue;
      }
      const std::string full = section_ + "." + key;
      if (seen_.count(full)) {
        error(line_no, "duplicate key '" + key + "' in [" + section_ + "]");
        continue;
      }
      if (assign(line_no, key, value)) {
        seen_[full] = line_no;
        cfg_.entries.emplace_back(full, value);
      }
    }
    finish();
    if (!errors_.empty()) throw InvalidInput(errors_);
    return cfg_;
  }

 private:
  void error(std::size_t line, const std::string& msg) {
    errors_.push_back("line " + std::to_string(line) + ": " + msg);
  }

  template <typename T>
  bool scalar(std::size_t line, const std::string& key, const std::string& value, T& out) {
    auto v = parse_number<T>(value);
    if (!v) {
      error(line, "malformed value for '" + key + "': '" + value + "'");
      return false;
    }
    out = *v;
    return true;
  }

  template <typename T>
  bool list(std::size_t line, const std::string& key, const std::string& value, std::vector<T>& out) {
    auto v = parse_list<T>(value);
    if (!v) {
      error(line, "malformed list for '" + key + "': '" + value + "'");
      return false;
    }
    out = std::move(*v);
    return true;
  }

  bool assign(std::size_t line, const std::string& key, const std::string& value) {
    if (section_ == "grid") return assign_grid(line, key, value);
    if (section_ == "solver") return assign_solver(line, key, value);
    if (section_ == "io") return assign_io(line, key, value);
    return false;  // unknown section, already reported
  }

  bool assign_grid(std::size_t line, const std::string& key, const std::string& value) {
    if (key == "dims") return list(line, key, value, cfg_.dims);
    if (key == "spacing") return list(line, key, value, cfg_.spacing);
    if (key == "blocks") return list(line, key, value, cfg_.blocks);
    if (key == "exponents") return list(line, key, value, cfg_.exponents);
    try {
      if (key == "boundary") {
        cfg_.boundary = parse_boundary_mode(value);
        return true;
      }
      if (key == "tv_norm") {
        cfg_.tv_norm = parse_tv_norm(value);
        return true;
      }
    } catch (const InvalidInput& e) {
      error(line, e.what());
      return false;
    }
    error(line, "unknown key '" + key + "' in [grid]");
    return false;
  }

  bool assign_solver(std::size_t line, const std::string& key, const std::string& value) {
    SolveOptions& s = cfg_.solve;
    if (key == "max_iter") return scalar(line, key, value, s.max_iter);
    if (key == "gap_tol") return scalar(line, key, value, s.gap_tol);
    if (key == "residual_check_every") return scalar(line, key, value, s.residual_check_every);
    if (key == "theta_relax") return scalar(line, key, value, s.theta_relax);
    if (key == "step_ratio") return scalar(line, key, value, s.step_ratio);
    if (key == "opnorm_iters") return scalar(line, key, value, s.opnorm_iters);
    if (key == "seed") return scalar(line, key, value, s.seed);
    if (key == "tau_time") return scalar(line, key, value, cfg_.tau_time);
    if (key == "steps") return scalar(line, key, value, cfg_.steps);
    if (key == "stride") return scalar(line, key, value, cfg_.stride);
    if (key == "oracle") {
      if (value != "elliptic" && value != "resolvent") {
        error(line, "oracle must be 'elliptic' or 'resolvent'");
        return false;
      }
      cfg_.oracle_kind = value;
      return true;
    }
    error(line, "unknown key '" + key + "' in [solver]");
    return false;
  }

  bool assign_io(std::size_t line, const std::string& key, const std::string& value) {
    static const std::map<std::string, FieldSource RunConfig::*> fields{
        {"f", &RunConfig::f}, {"g", &RunConfig::g}, {"u0", &RunConfig::u0},
        {"u", &RunConfig::u}, {"rhs", &RunConfig::rhs}};
    if (auto it = fields.find(key); it != fields.end()) {
      if (value.empty()) {
        error(line, "empty path for '" + key + "'");
        return false;
      }
      (cfg_.*(it->second)).path = value;
      return true;
    }
    const auto suffix = std::string("_value");
    if (key.size() > suffix.size() && key.ends_with(suffix)) {
      const std::string base = key.substr(0, key.size() - suffix.size());
      if (auto it = fields.find(base); it != fields.end()) {
        double v = 0.0;
        if (!scalar(line, key, value, v)) return false;
        (cfg_.*(it->second)).value = v;
        return true;
      }
    }
    if (key == "z") {
      cfg_.z = value;
      return true;
    }
    if (key == "trace") {
      cfg_.trace = value;
      return true;
    }
    error(line, "unknown key '" + key + "' in [io]");
    return false;
  }

  std::size_t line_of(const std::string& key) const {
    auto it = seen_.find(key);
    return it == seen_.end() ? 0 : it->second;
  }

  void finish() {
    for (const char* key : {"dims", "blocks", "exponents"}) {
      if (!seen_.count(std::string("grid.") + key)) {
        errors_.push_back(std::string("missing required key '") + key + "' in [grid]");
      }
    }
    if (cfg_.spacing.empty()) cfg_.spacing.assign(cfg_.dims.size(), 1.0);
    if (cfg_.spacing.size() == 1 && cfg_.dims.size() > 1) {
      cfg_.spacing.assign(cfg_.dims.size(), cfg_.spacing.front());
    }
    if (seen_.count("grid.dims") && seen_.count("grid.blocks") && seen_.count("grid.exponents")) {
      for (const auto& msg :
           GridSpec::violations(cfg_.dims, cfg_.spacing, cfg_.blocks, cfg_.exponents)) {
        std::string key = "grid.dims";
        if (msg.starts_with("spacing")) {
          key = "grid.spacing";
        } else if (msg.find("block") != std::string::npos) {
          key = "grid.blocks";
        } else if (msg.starts_with("p") || msg.find("exponent") != std::string::npos) {
          key = "grid.exponents";
        }
        const std::size_t line = line_of(key);
        errors_.push_back(line ? "line " + std::to_string(line) + ": " + msg : msg);
      }
    }
    try {
      cfg_.solve.validate();
    } catch (const InvalidInput& e) {
      for (const auto& d : e.details()) errors_.push_back("[solver] " + d);
    }
    if (!(cfg_.tau_time > 0.0)) {
      error(line_of("solver.tau_time"), "tau_time must be > 0");
    }
    if (cfg_.steps < 1) error(line_of("solver.steps"), "steps must be >= 1");
    if (cfg_.stride < 1) error(line_of("solver.stride"), "stride must be >= 1");
    for (const char* name : {"f", "g", "u0", "u", "rhs"}) {
      const std::string path_key = std::string("io.") + name;
      const std::string value_key = path_key + "_value";
      if (seen_.count(path_key) && seen_.count(value_key)) {
        error(line_of(value_key), std::string("both '") + name + "' and '" + name + "_value' given");
      }
    }
  }

  RunConfig cfg_;
  std::string section_;
  std::map<std::string, std::size_t> seen_;
  std::vector<std::string> errors_;
};

void put_bytes(std::vector<std::uint8_t>& out, const void* src, std::size_t n) {
  const auto* p = static_cast<const std::uint8_t*>(src);
  out.insert(out.end(), p, p + n);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(buf[sizeof(T) - 1 - i]);
  } else {
    put_bytes(out, &value, sizeof(T));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (remaining() < sizeof(T)) throw IoError(std::string("truncated field file while reading ") + what);
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  void skip(std::size_t n) { pos_ += n; }
  const std::uint8_t* cursor() const { return bytes_.data() + pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_all(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace

GridSpec RunConfig::grid() const {
  return GridSpec(dims, spacing, blocks, exponents, boundary, tv_norm);
}

RunConfig parse_config(std::string_view text) { return ConfigParser().parse(text); }

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<std::uint8_t> encode_field(const ScalarField& field) {
  if (field.dims().size() > 255) throw InvalidInput("field has more than 255 axes");
  std::vector<std::uint8_t> out;
  out.reserve(13 + 16 * field.dims().size() + 8 * field.size());
  put_bytes(out, "ANZF", 4);
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(field.dims().size()));
  for (auto d : field.dims()) put_le<std::uint64_t>(out, d);
  for (double h : field.spacing()) put_le<double>(out, h);
  for (double v : field.values()) put_le<double>(out, v);
  return out;
}

ScalarField decode_field(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.remaining() < 4 || std::memcmp(r.cursor(), "ANZF", 4) != 0) {
    throw IoError("bad magic: not an ANZF field file");
  }
  r.skip(4);
  const auto version = r.get<std::uint32_t>("version");
  if (version != 1) throw IoError("unsupported ANZF version " + std::to_string(version));
  const auto ndim = r.get<std::uint8_t>("ndim");
  std::vector<std::size_t> dims;
  std::uint64_t count = ndim == 0 ? 0 : 1;
  for (unsigned a = 0; a < ndim; ++a) {
    const auto d = r.get<std::uint64_t>("dims");
    if (d != 0 && count > std::numeric_limits<std::uint64_t>::max() / 8 / d) {
      throw IoError("dimension overflow in field header");
    }
    count *= d;
    dims.push_back(static_cast<std::size_t>(d));
  }
  std::vector<double> spacing;
  for (unsigned a = 0; a < ndim; ++a) spacing.push_back(r.get<double>("spacing"));
  if (r.remaining() < count * 8) {
    throw IoError("truncated payload: expected " + std::to_string(count) + " values");
  }
  if (r.remaining() > count * 8) throw IoError("trailing bytes after payload");
  std::vector<double> values(count);
  for (auto& v : values) v = r.get<double>("payload");
  return ScalarField(std::move(dims), std::move(spacing), std::move(values));
}

void write_field(const std::string& path, const ScalarField& field) {
  write_all(path, encode_field(field));
}

ScalarField read_field(const std::string& path) {
  const auto bytes = read_all(path);
  try {
    return decode_field(bytes);
  } catch (const IoError& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

std::string component_path(const std::string& prefix, std::size_t axis) {
  return prefix + ".axis" + std::to_string(axis) + ".anzf";
}

void write_vector_field(const std::string& prefix, const BlockVectorField& z, const GridSpec& spec) {
  require_conforming(z, spec, "write_vector_field");
  for (std::size_t a = 0; a < spec.ndim(); ++a) {
    const auto comp = z.component(a);
    write_field(component_path(prefix, a),
                ScalarField(spec.dims(), spec.spacing(), std::vector<double>(comp.begin(), comp.end())));
  }
}

BlockVectorField read_vector_field(const std::string& prefix, const GridSpec& spec) {
  BlockVectorField z(spec);
  for (std::size_t a = 0; a < spec.ndim(); ++a) {
    const ScalarField comp = read_field(component_path(prefix, a));
    require_conforming(comp, spec, "read_vector_field");
    std::copy(comp.values().begin(), comp.values().end(), z.component(a).begin());
  }
  return z;
}

void write_boundary_field(const std::string& path, const BoundaryField& b) {
  const auto v = b.values();
  write_field(path, ScalarField({b.size()}, {1.0}, std::vector<double>(v.begin(), v.end())));
}

BoundaryField read_boundary_field(const std::string& path, const GridSpec& spec) {
  const ScalarField f = read_field(path);
  if (f.dims().size() != 1) throw InvalidInput("trace file must be one-dimensional");
  BoundaryField b(std::vector<double>(f.values().begin(), f.values().end()));
  require_conforming(b, spec, "read_boundary_field");
  return b;
}

ScalarField load_field(const FieldSource& source, const GridSpec& spec, std::string_view name) {
  if (source.path) {
    ScalarField f = read_field(*source.path);
    require_conforming(f, spec, name);
    if (!f.all_finite()) throw InvalidInput(std::string(name) + " contains non-finite values");
    return f;
  }
  if (source.value) return ScalarField(spec, *source.value);
  throw InvalidInput("missing input field '" + std::string(name) + "' in [io]");
}

nlohmann::json to_json(const GridSpec& spec) {
  return {{"dims", spec.dims()},
          {"spacing", spec.spacing()},
          {"blocks", spec.block_sizes()},
          {"exponents", spec.exponents()},
          {"boundary", to_string(spec.mode())},
          {"tv_norm", to_string(spec.tv_norm())},
          {"cells", spec.cell_count()},
          {"faces", spec.face_count()}};
}

nlohmann::json to_json(const SolveReport& r) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : r.history) {
    history.push_back({{"iteration", h.iteration}, {"gap", h.gap}, {"primal", h.primal}, {"dual", h.dual}});
  }
  return {{"kind", to_string(r.kind)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"final_gap", r.final_gap},
          {"primal_value", r.primal_value},
          {"dual_value", r.dual_value},
          {"scale", r.scale},
          {"bracket_e", r.bracket_e},
          {"bracket_g", r.bracket_g},
          {"subdiff_violation", r.subdiff_violation},
          {"divergence_residual", r.divergence_residual},
          {"coercivity_radius", r.coercivity_radius},
          {"opnorm", r.opnorm},
          {"sigma", r.sigma},
          {"tau", r.tau},
          {"theta_relax", r.theta_relax},
          {"tau_time", r.tau_time},
          {"seed", r.seed},
          {"primal_source", r.primal_source},
          {"history", history}};
}

nlohmann::json to_json(const Certificate& c) {
  nlohmann::json out{{"mode", to_string(c.mode)},
                     {"boundary_mode", to_string(c.boundary_mode)},
                     {"tv_norm", to_string(c.tv_norm)},
                     {"sup_norm_z1", c.sup_norm_z1},
                     {"trace_sup", c.trace_sup},
                     {"tv_block1", c.tv_block1},
                     {"pairing", c.pairing},
                     {"pairing_residual", c.pairing_residual},
                     {"constitutive_residuals", c.constitutive_residuals},
                     {"constitutive_excess", c.constitutive_excess},
                     {"divergence_residual", c.divergence_residual},
                     {"boundary_sign_residual", c.boundary_sign_residual},
                     {"boundary_sign_excess", c.boundary_sign_excess},
                     {"gauss_green_residual", c.gauss_green_residual},
                     {"total_excess", c.total_excess()}};
  out["gap"] = c.gap ? nlohmann::json(*c.gap) : nlohmann::json(nullptr);
  return out;
}

nlohmann::json to_json(const Trajectory& t) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : t.steps) {
    steps.push_back({{"index", s.index},
                     {"time", s.time},
                     {"energy_before", s.energy_before},
                     {"energy_after", s.energy_after},
                     {"movement", s.movement},
                     {"gap", s.gap},
                     {"scale", s.scale},
                     {"dissipation_excess", s.dissipation_excess},
                     {"iterations", s.report.iterations},
                     {"primal_source", s.report.primal_source},
                     {"certificate", to_json(s.certificate)}});
  }
  return {{"tau_time", t.tau_time}, {"times", t.times}, {"energies", t.energies}, {"steps", steps}};
}

nlohmann::json to_json(const OracleResult& r) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : r.stages) {
    stages.push_back({{"eps", s.eps},
                      {"iterations", s.iterations},
                      {"smoothed_value", s.smoothed_value},
                      {"decrement", s.decrement}});
  }
  return {{"value_ref", r.value_ref}, {"stages", stages}};
}

nlohmann::json config_echo(const RunConfig& config) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : config.entries) out[key] = value;
  return out;
}

nlohmann::json error_object(std::string_view kind, std::string_view message,
                            const std::vector<std::string>& details) {
  return {{"error", {{"kind", kind}, {"message", message}, {"details", details}}}};
}

void emit_report(const nlohmann::json& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << report.dump(2) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace anisoflow
