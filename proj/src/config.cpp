#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "dgb/error.hpp"
#include "dgb/io.hpp"

namespace dgb::io {

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); }

double to_double(const std::string& key, const std::string& value) {
  double out = 0;
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) bad(key + ": expected a number, got '" + value + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& value) {
  long long out = 0;
  const char* first = value.data();
  const char* last = first + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) bad(key + ": expected an integer, got '" + value + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad(key + ": expected true or false, got '" + value + "'");
}

void field_keys(std::map<std::string, std::function<void(const std::string&, const std::string&)>>& setters,
                const std::string& prefix, FieldSpec& field) {
  setters[prefix + ".kind"] = [&field](const std::string& k, const std::string& v) {
    if (v != "cosine" && v != "sine" && v != "random" && v != "zero") bad(k + ": unknown field kind '" + v + "'");
    field.kind = v;
  };
  setters[prefix + ".mode"] = [&field](const std::string& k, const std::string& v) {
    field.mode = static_cast<int>(to_integer(k, v));
  };
  setters[prefix + ".amplitude"] = [&field](const std::string& k, const std::string& v) {
    field.amplitude = to_double(k, v);
  };
  setters[prefix + ".mean"] = [&field](const std::string& k, const std::string& v) { field.mean = to_double(k, v); };
  setters[prefix + ".decay"] = [&field](const std::string& k, const std::string& v) { field.decay = to_double(k, v); };
}

}  // namespace

std::map<std::string, std::string> parse_entries(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) bad("line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) bad("line " + std::to_string(number) + ": empty key");
    if (!out.emplace(key, value).second) bad("line " + std::to_string(number) + ": duplicate key '" + key + "'");
  }
  return out;
}

RunConfig build_config(const std::map<std::string, std::string>& entries) {
  RunConfig c;
  std::map<std::string, std::function<void(const std::string&, const std::string&)>> set;
  set["experiment"] = [&c](const std::string& k, const std::string& v) {
    static const std::vector<std::string> known{"simulate", "stabilize", "control-linear", "control-nonlinear",
                                                "observability", "lemmas"};
    if (std::find(known.begin(), known.end(), v) == known.end()) bad(k + ": unknown experiment '" + v + "'");
    c.experiment = v;
  };
  set["output"] = [&c](const std::string&, const std::string& v) { c.output_dir = v; };
  set["seed"] = [&c](const std::string& k, const std::string& v) {
    const long long s = to_integer(k, v);
    if (s < 0) bad(k + ": must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  };
  set["params.alpha"] = [&c](const std::string& k, const std::string& v) { c.params.alpha = to_double(k, v); };
  set["params.beta"] = [&c](const std::string& k, const std::string& v) { c.params.beta = to_double(k, v); };
  set["params.m"] = [&c](const std::string& k, const std::string& v) { c.params.m = to_double(k, v); };
  set["params.r"] = [&c](const std::string& k, const std::string& v) { c.params.r = to_double(k, v); };
  set["params.mu"] = [&c](const std::string& k, const std::string& v) { c.params.mu = to_double(k, v); };
  set["params.delta"] = [&c](const std::string& k, const std::string& v) { c.params.delta = to_double(k, v); };
  set["profile.kind"] = [&c](const std::string& k, const std::string& v) {
    if (v != "global" && v != "bump") bad(k + ": expected global or bump");
    c.profile.kind = v;
  };
  set["profile.a"] = [&c](const std::string& k, const std::string& v) { c.profile.a = to_double(k, v); };
  set["profile.b"] = [&c](const std::string& k, const std::string& v) { c.profile.b = to_double(k, v); };
  set["profile.K"] = [&c](const std::string& k, const std::string& v) {
    c.profile.K = static_cast<int>(to_integer(k, v));
  };
  set["profile.gridM"] = [&c](const std::string& k, const std::string& v) {
    c.profile.grid_m = static_cast<int>(to_integer(k, v));
  };
  set["profile.truncation"] = [&c](const std::string& k, const std::string& v) {
    if (v != "fejer" && v != "sharp") bad(k + ": expected fejer or sharp");
    c.profile.truncation = v;
  };
  set["disc.N"] = [&c](const std::string& k, const std::string& v) { c.N = static_cast<int>(to_integer(k, v)); };
  set["disc.M"] = [&c](const std::string& k, const std::string& v) { c.M = static_cast<int>(to_integer(k, v)); };
  set["disc.dt"] = [&c](const std::string& k, const std::string& v) { c.dt = to_double(k, v); };
  set["disc.T"] = [&c](const std::string& k, const std::string& v) { c.T = to_double(k, v); };
  set["disc.record_every"] = [&c](const std::string& k, const std::string& v) {
    c.record_every = static_cast<int>(to_integer(k, v));
  };
  set["sim.nonlinear"] = [&c](const std::string& k, const std::string& v) { c.nonlinear = to_bool(k, v); };
  set["sim.damped"] = [&c](const std::string& k, const std::string& v) { c.damped = to_bool(k, v); };
  field_keys(set, "initial", c.initial);
  field_keys(set, "target", c.target);
  set["lemmas.nmax"] = [&c](const std::string& k, const std::string& v) {
    c.lemmas.n_max = static_cast<int>(to_integer(k, v));
  };
  set["lemmas.resonance_a"] = [&c](const std::string& k, const std::string& v) {
    c.lemmas.resonance_a = static_cast<int>(to_integer(k, v));
  };
  set["lemmas.gap_kmin"] = [&c](const std::string& k, const std::string& v) {
    c.lemmas.gap_kmin = static_cast<int>(to_integer(k, v));
  };
  set["lemmas.modulation_floor"] = [&c](const std::string& k, const std::string& v) {
    c.lemmas.modulation_floor = static_cast<int>(to_integer(k, v));
  };
  set["lemmas.sweep_points"] = [&c](const std::string& k, const std::string& v) {
    c.lemmas.sweep_points = static_cast<int>(to_integer(k, v));
  };
  set["lemmas.d_range"] = [&c](const std::string& k, const std::string& v) {
    c.lemmas.d_range = static_cast<int>(to_integer(k, v));
  };
  set["window.t0"] = [&c](const std::string& k, const std::string& v) { c.window_t0 = to_double(k, v); };
  set["window.t1"] = [&c](const std::string& k, const std::string& v) { c.window_t1 = to_double(k, v); };
  set["control.certify_dt"] = [&c](const std::string& k, const std::string& v) { c.certify_dt = to_double(k, v); };
  set["control.s"] = [&c](const std::string& k, const std::string& v) { c.control_s = to_double(k, v); };

  for (const auto& [key, value] : entries) {
    auto it = set.find(key);
    if (it == set.end()) bad("unknown key '" + key + "'");
    it->second(key, value);
  }
  c.entries = entries;

  validate(c.params);
  if (c.N < 4) bad("disc.N must be at least 4");
  if (!(c.dt > 0)) bad("disc.dt must be positive");
  if (!(c.T > 0)) bad("disc.T must be positive");
  if (c.record_every < 1) bad("disc.record_every must be at least 1");
  if (c.M != 0 && c.M < 2 * c.N + 1) {
    throw Error(ErrorKind::TruncationAliasing, "disc.M must be at least 2N+1 = " + std::to_string(2 * c.N + 1));
  }
  if (c.profile.kind == "bump") {
    if (!(c.profile.a >= 0 && c.profile.a < c.profile.b && c.profile.b <= 2 * kPi<double>)) {
      throw Error(ErrorKind::InvalidSupport, "profile support must satisfy 0 <= a < b <= 2pi");
    }
    if (c.profile.K < 1) bad("profile.K must be positive");
  }
  if (!(c.certify_dt > 0)) bad("control.certify_dt must be positive");
  if (c.window_t0 && c.window_t1 && !(*c.window_t0 < *c.window_t1)) bad("window.t0 must precede window.t1");
  if (c.lemmas.n_max < 2) bad("lemmas.nmax must be at least 2");
  return c;
}

RunConfig parse_config(std::string_view text) { return build_config(parse_entries(text)); }

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) bad("cannot read config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto entries = parse_entries(buffer.str());
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) bad("override '" + item + "' is not key=value");
    entries[trim(std::string_view(item).substr(0, eq))] = trim(std::string_view(item).substr(eq + 1));
  }
  return build_config(entries);
}

}  // namespace dgb::io
