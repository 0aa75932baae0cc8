#include <cstdio>
#include <fstream>
#include <sstream>

#include "dgb/error.hpp"
#include "dgb/io.hpp"

namespace dgb::io {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

DampingProfiled make_profile(const ProfileSpec& spec, double delta) {
  if (spec.kind == "global") return make_profile_global(delta);
  const auto truncation = spec.truncation == "sharp" ? BumpTruncation::Sharp : BumpTruncation::Fejer;
  return make_profile_bump(spec.a, spec.b, spec.K, spec.grid_m, delta, truncation);
}

SpectralFieldd make_field(const FieldSpec& spec, int cutoff, std::mt19937_64& rng) {
  SpectralFieldd out = SpectralFieldd::constant(cutoff, spec.mean);
  if (spec.kind == "cosine") {
    out = out + SpectralFieldd::cosine(cutoff, spec.mode, spec.amplitude);
  } else if (spec.kind == "sine") {
    out = out + SpectralFieldd::sine(cutoff, spec.mode, spec.amplitude);
  } else if (spec.kind == "random") {
    std::normal_distribution<double> normal;
    CoeffVector<double> c = CoeffVector<double>::Zero(2 * cutoff + 1);
    for (int k = 1; k <= cutoff; ++k) {
      const double scale = spec.amplitude * std::pow(double(k), -spec.decay);
      const double re = normal(rng), im = normal(rng);
      c(cutoff + k) = scale * Complex<double>(re, im);
      c(cutoff - k) = std::conj(c(cutoff + k));
    }
    c(cutoff) = spec.mean;
    out = SpectralFieldd(std::move(c));
  } else if (spec.kind != "zero") {
    throw Error(ErrorKind::InvalidConfig, "unknown field kind '" + spec.kind + "'");
  }
  return out;
}

nlohmann::json profile_to_json(const DampingProfiled& p) {
  nlohmann::json j;
  if (p.is_global()) {
    j["support"] = "global";
  } else {
    j["support"] = {p.support_begin(), p.support_end()};
  }
  j["K"] = p.cutoff();
  j["delta"] = p.delta();
  auto ghat = nlohmann::json::array();
  for (int k = -p.cutoff(); k <= p.cutoff(); ++k) ghat.push_back({p.ghat(k).real(), p.ghat(k).imag()});
  j["ghat"] = std::move(ghat);
  return j;
}

DampingProfiled profile_from_json(const nlohmann::json& j) {
  const int kg = j.at("K").get<int>();
  const auto& ghat = j.at("ghat");
  if (static_cast<int>(ghat.size()) != 2 * kg + 1) {
    throw Error(ErrorKind::InvalidConfig, "profile record: ghat must hold 2K+1 pairs");
  }
  CoeffVector<double> c(2 * kg + 1);
  for (int i = 0; i <= 2 * kg; ++i) c(i) = Complex<double>(ghat[i].at(0).get<double>(), ghat[i].at(1).get<double>());
  const double delta = j.at("delta").get<double>();
  if (j.at("support").is_string()) {
    return DampingProfiled(std::move(c), delta, true, 0, 2 * kPi<double>);
  }
  return DampingProfiled(std::move(c), delta, false, j["support"][0].get<double>(), j["support"][1].get<double>());
}

nlohmann::json field_to_json(const SpectralFieldd& v) {
  nlohmann::json j;
  j["cutoff"] = v.cutoff();
  auto coeffs = nlohmann::json::array();
  for (int k = -v.cutoff(); k <= v.cutoff(); ++k) coeffs.push_back({v[k].real(), v[k].imag()});
  j["coeffs"] = std::move(coeffs);
  return j;
}

std::string profile_hash(const DampingProfiled& p) {
  std::string bytes = format_double(p.delta());
  for (int k = -p.cutoff(); k <= p.cutoff(); ++k) {
    bytes += ',' + format_double(p.ghat(k).real()) + ',' + format_double(p.ghat(k).imag());
  }
  return hex64(fnv1a(bytes));
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorKind::InvalidConfig, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string trajectory_csv(const TrajectoryRecordd& record) {
  std::ostringstream out;
  out << "t,l2norm,mean,energyResidual\n";
  for (std::size_t i = 0; i < record.size(); ++i) {
    const double residual = i < record.energy_residuals.size() ? record.energy_residuals[i] : 0.0;
    out << format_double(record.times[i]) << ',' << format_double(record.l2norms[i]) << ','
        << format_double(record.means[i]) << ',' << format_double(residual) << '\n';
  }
  return out.str();
}

std::string control_csv(const ControlSolution<double>& solution) {
  std::ostringstream out;
  out << "t,k,re,im\n";
  for (std::size_t i = 0; i < solution.times.size(); ++i) {
    const auto& h = solution.h[i];
    const int n = band_of(h.size());
    for (int k = -n; k <= n; ++k) {
      out << format_double(solution.times[i]) << ',' << k << ',' << format_double(h(k + n).real()) << ','
          << format_double(h(k + n).imag()) << '\n';
    }
  }
  return out.str();
}

std::string d_table_csv(const DampingProfiled& p, int n) {
  std::ostringstream out;
  out << "k,d,ratio\n";
  for (int k = 0; k <= n; ++k) {
    const double d = p.d(k);
    out << k << ',' << format_double(d) << ',' << format_double(d / std::pow(bracket(double(k)), p.delta()))
        << '\n';
  }
  return out.str();
}

}  // namespace dgb::io
