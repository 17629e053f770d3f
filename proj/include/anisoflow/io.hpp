#pragma once

// Run configuration (key = value text with [grid], [solver] and [io]
// sections), the ANZF binary field format and JSON reports.
//
// ANZF layout, little-endian:
//   "ANZF" | u32 version = 1 | u8 ndim | u64 dims[ndim] | f64 spacing[ndim] |
//   f64 values[prod dims], row-major.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "anisoflow/certificates.hpp"
#include "anisoflow/flow.hpp"
#include "anisoflow/grid.hpp"
#include "anisoflow/oracle.hpp"
#include "anisoflow/pd_solver.hpp"
#include "json.hpp"

namespace anisoflow {

// A field given either by file or by a constant value.
struct FieldSource {
  std::optional<std::string> path;
  std::optional<double> value;

  bool present() const { return path.has_value() || value.has_value(); }
};

struct RunConfig {
  std::vector<std::size_t> dims;
  std::vector<double> spacing;
  std::vector<std::size_t> blocks;
  std::vector<double> exponents;
  BoundaryMode boundary = BoundaryMode::dirichlet_penalized;
  TvNorm tv_norm = TvNorm::euclidean;

  SolveOptions solve;
  double tau_time = 1.0;
  int steps = 1;
  std::size_t stride = 1;
  std::string oracle_kind = "elliptic";  // problem solved by the `oracle` subcommand

  FieldSource f;
  FieldSource g;
  FieldSource u0;
  FieldSource u;
  FieldSource rhs;
  std::optional<std::string> z;      // prefix of per-axis component files
  std::optional<std::string> trace;

  // Every accepted key as (section.key, raw value), in file order.
  std::vector<std::pair<std::string, std::string>> entries;

  GridSpec grid() const;
};

// Throws InvalidInput whose details() lists every problem found, each
// prefixed with its line number.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

std::vector<std::uint8_t> encode_field(const ScalarField& field);
ScalarField decode_field(std::span<const std::uint8_t> bytes);
void write_field(const std::string& path, const ScalarField& field);
ScalarField read_field(const std::string& path);

// One ANZF file per axis: <prefix>.axis<a>.anzf.
std::string component_path(const std::string& prefix, std::size_t axis);
void write_vector_field(const std::string& prefix, const BlockVectorField& z, const GridSpec& spec);
BlockVectorField read_vector_field(const std::string& prefix, const GridSpec& spec);

// Face values as a 1-D ANZF file with unit spacing.
void write_boundary_field(const std::string& path, const BoundaryField& b);
BoundaryField read_boundary_field(const std::string& path, const GridSpec& spec);

// Resolves a FieldSource against the grid (reads the file or fills the constant).
ScalarField load_field(const FieldSource& source, const GridSpec& spec, std::string_view name);

// JSON views. Wall time is left out so that repeated runs serialize identically.
nlohmann::json to_json(const GridSpec& spec);
nlohmann::json to_json(const SolveReport& report);
nlohmann::json to_json(const Certificate& cert);
nlohmann::json to_json(const Trajectory& traj);
nlohmann::json to_json(const OracleResult& result);
nlohmann::json config_echo(const RunConfig& config);

// {"error": {"kind", "message", "details"}}
nlohmann::json error_object(std::string_view kind, std::string_view message,
                            const std::vector<std::string>& details = {});

// Pretty-printed JSON plus trailing newline; sorted keys.
void emit_report(const nlohmann::json& report, const std::string& path);

}  // namespace anisoflow
