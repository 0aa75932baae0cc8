#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dgb/control.hpp"
#include "dgb/damping.hpp"
#include "dgb/dynamics.hpp"
#include "dgb/params.hpp"
#include "dgb/spectral.hpp"

namespace dgb::io {

inline constexpr const char* kVersion = "dgb 0.3.0";

struct ProfileSpec {
  std::string kind = "global";  // global | bump
  double a = 1.5707963267948966;
  double b = 4.71238898038469;
  int K = 64;
  int grid_m = 1024;
  std::string truncation = "fejer";  // fejer | sharp
};

struct FieldSpec {
  std::string kind = "cosine";  // cosine | sine | random | zero
  int mode = 1;
  double amplitude = 0.1;
  double mean = 0;
  double decay = 2;  // random: |vhat(k)| ~ |k|^-decay
};

struct LemmaSpec {
  int n_max = 64;
  int resonance_a = 1;
  int gap_kmin = 1;
  int modulation_floor = 1;
  int sweep_points = 50;
  int d_range = 256;
};

struct RunConfig {
  std::string experiment = "simulate";
  std::filesystem::path output_dir = "out";
  ModelParamsd params;
  ProfileSpec profile;
  int N = 128;
  int M = 0;  // 0: smallest admissible grid
  double dt = 1e-3;
  double T = 1;
  int record_every = 1;
  std::uint64_t seed = 0;
  FieldSpec initial;
  FieldSpec target{"cosine", 2, 0.1, 0, 2};
  bool nonlinear = true;
  bool damped = true;
  LemmaSpec lemmas;
  std::optional<double> window_t0, window_t1;
  double certify_dt = 1e-5;
  double control_s = 0;
  std::map<std::string, std::string> entries;  // canonical echo of the parsed document

  int grid_size() const { return M > 0 ? M : 2 * N + 1; }
};

/// `key = value` lines; `#` starts a comment. Duplicate keys are rejected.
std::map<std::string, std::string> parse_entries(std::string_view text);

/// Strict: unknown keys and violated model hypotheses raise dgb::Error.
RunConfig build_config(const std::map<std::string, std::string>& entries);

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<std::string>& overrides = {});

struct RunManifest {
  std::string experiment;
  std::string run_id;
  std::string profile_hash;
  std::string version = kVersion;
  double wall_time = 0;
  std::map<std::string, double> summary;
  std::map<std::string, std::string> notes;
  std::map<std::string, std::string> config;

  nlohmann::json to_json() const;
};

RunManifest run(const RunConfig& config);

/// Runs each config on a pool of `threads` workers; every config must name
/// its own output directory.
std::vector<RunManifest> run_sweep(const std::vector<RunConfig>& configs, int threads);

// ---------------------------------------------------------------------------
// Building blocks shared with the tool and the tests

DampingProfiled make_profile(const ProfileSpec& spec, double delta);
SpectralFieldd make_field(const FieldSpec& spec, int cutoff, std::mt19937_64& rng);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);
std::string format_double(double value);

nlohmann::json profile_to_json(const DampingProfiled& p);
DampingProfiled profile_from_json(const nlohmann::json& j);
nlohmann::json field_to_json(const SpectralFieldd& v);
std::string profile_hash(const DampingProfiled& p);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string trajectory_csv(const TrajectoryRecordd& record);
std::string control_csv(const ControlSolution<double>& solution);
std::string d_table_csv(const DampingProfiled& p, int n);

}  // namespace dgb::io
