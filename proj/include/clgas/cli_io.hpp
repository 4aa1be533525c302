#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clgas/error.hpp"
#include "clgas/integrators.hpp"
#include "clgas/lyapunov.hpp"
#include "clgas/samplers.hpp"
#include "clgas/system.hpp"

namespace clgas {

struct InitialCondition {
  std::string layout = "auto";  // auto | ring | line | gaussian | explicit
  double scale = 1.0;
  std::vector<double> q;  // explicit layout only
  std::vector<double> p;  // optional; zero when empty
  std::string checkpoint;  // simulate resumes state and RNG from this file when set
};

struct RunConfig {
  SystemParams system;
  std::string potential_form = "quadratic";  // quadratic | double_well
  double potential_omega = 1.0;
  LyapunovParams lyapunov;
  IntegratorConfig integrator;
  HmcConfig sampler;
  std::string preset = "none";  // none | ginibre
  double beta_tilde = 2.0;
  std::uint64_t seed = 0;

  double T = 10.0;
  std::size_t stride = 1;

  std::size_t replicas = 0;  // supermartingale replicas; 0 skips that check
  std::size_t checkpoints = 20;
  std::size_t bootstrap = 2000;
  std::size_t n_train = 10000;
  std::size_t n_test = 10000;
  std::size_t n_configs = 10000;

  std::string diagnose_input;
  std::size_t diagnose_burn_in = 0;
  std::size_t diagnose_bins = 20;

  InitialCondition initial;

  std::string out_csv;
  std::string out_checkpoint;
  std::string out_json;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Parses flat `key = value` lines ('#' starts a comment). Unknown keys,
/// duplicates and malformed values throw ParseError naming line and key.
/// `overrides` are applied after the text. The result is resolved (preset
/// applied, seed propagated, kernel dimension set from d) and validated;
/// inconsistent fields throw ValidationError naming the field.
RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});

/// Every key with its resolved value, one per line, doubles at %.17g.
/// parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const RunConfig& config);

/// All recognized keys in canonical order.
std::vector<std::string> config_keys();

void validate_run_config(const RunConfig& config);

/// Initial state from `config.initial`. Deterministic; the gaussian layout
/// draws from StreamRng(seed, 2).
ParticleState initial_state(const RunConfig& config);

// Checkpoints: "CLGV" + ASCII version digit, N and d as u32 LE, q then p as
// f64 LE, then a u32 LE length and the serialized RNG state.

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ParticleState state;
  StreamRng rng;
};

std::vector<std::uint8_t> encode_checkpoint(const ParticleState& state, const StreamRng& rng);
/// FormatError on bad magic or version, TruncationError on short input.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void write_checkpoint(const std::string& path, const ParticleState& state, const StreamRng& rng);
Checkpoint read_checkpoint(const std::string& path);

/// %.17g
std::string format_double(double value);

/// Header row `t,H,logW,minDist,kinetic,q0_0,...,p0_0,...`; one row per snapshot.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record);
/// Header row `iteration,H,accept,q0_0,...`; one row per kept sample.
void write_hmc_csv(std::ostream& out, const HmcChain& chain);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; FormatError if absent.
  std::size_t column(std::string_view name) const;
  std::vector<double> column_values(std::string_view name) const;
};
/// Numeric CSV with one header row. FormatError on ragged or non-numeric rows.
CsvTable read_csv(std::istream& in);

/// Number of particles and dimension encoded in `qI_K` column names.
std::pair<std::size_t, std::size_t> particle_shape(const CsvTable& table);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

/// 0 success, 2 validation, 3 numerical, 4 I/O.
int exit_code(ErrorKind kind);

inline constexpr const char* kToolVersion = "0.1.0";

struct Manifest {
  std::string subcommand;
  std::string config_text;  // to_config_text of the resolved config
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
};

std::string manifest_to_json(const Manifest& manifest);
/// FormatError on malformed JSON or missing fields.
Manifest manifest_from_json(std::string_view text);

}  // namespace clgas
