#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rdt/binomial_mcmc.hpp"
#include "rdt/errors.hpp"
#include "rdt/weibull.hpp"

// File formats: historical pass/fail CSV (header `n,x`), lifetime CSV
// (header `location,stress,time,censored`), and a small sectioned key=value
// format for priors and elicitation inputs.

namespace rdt {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw incoherence_error(where + ": cannot parse number '" + t + "'");
  return v;
}

inline long long parse_int(const std::string& s, const std::string& where) {
  const std::string t = trim(s);
  long long v = 0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end)
    throw incoherence_error(where + ": cannot parse integer '" + t + "'");
  return v;
}

}  // namespace detail

inline BinomialHistoricalData read_binomial_history_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw incoherence_error("cannot open historical data file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw incoherence_error("historical data: empty file: " + path);
  if (detail::trim(line) != "n,x")
    throw incoherence_error("historical data: expected header 'n,x' in " + path);
  BinomialHistoricalData data;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto fields = detail::split(t, ',');
    const std::string where = path + ":" + std::to_string(row);
    if (fields.size() != 2) throw incoherence_error(where + ": expected 2 fields");
    BinomialHistoricalData::Record r;
    r.demands = detail::parse_int(fields[0], where);
    r.failures = detail::parse_int(fields[1], where);
    if (r.failures > r.demands || r.demands < 0 || r.failures < 0)
      throw incoherence_error(where + ": need 0 <= x <= n");
    data.records.push_back(r);
  }
  data.validate();
  return data;
}

struct NamedWeibullData {
  WeibullData data;
  std::vector<std::string> location_names;
};

inline NamedWeibullData read_weibull_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw incoherence_error("cannot open lifetime data file: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw incoherence_error("lifetime data: empty file: " + path);
  if (detail::trim(line) != "location,stress,time,censored")
    throw incoherence_error(
        "lifetime data: expected header 'location,stress,time,censored' in " + path);
  NamedWeibullData out;
  std::map<std::string, int> ids;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto fields = detail::split(t, ',');
    const std::string where = path + ":" + std::to_string(row);
    if (fields.size() != 4) throw incoherence_error(where + ": expected 4 fields");
    const std::string name = detail::trim(fields[0]);
    auto it = ids.find(name);
    if (it == ids.end()) {
      it = ids.emplace(name, static_cast<int>(out.location_names.size())).first;
      out.location_names.push_back(name);
    }
    WeibullObservation o;
    o.location = it->second;
    o.stress = detail::parse_double(fields[1], where);
    o.time = detail::parse_double(fields[2], where);
    const long long cens = detail::parse_int(fields[3], where);
    if (cens != 0 && cens != 1)
      throw incoherence_error(where + ": censored must be 0 or 1");
    o.censored = cens == 1;
    if (!(o.time > 0.0)) throw incoherence_error(where + ": time must be positive");
    out.data.obs.push_back(o);
  }
  out.data.n_locations = static_cast<int>(out.location_names.size());
  out.data.validate();
  return out;
}

// Sectioned key=value text: `[section]` headers, `key = value` lines,
// '#' comments.
struct KeyValueFile {
  std::map<std::string, std::map<std::string, std::string>> sections;

  static KeyValueFile read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw incoherence_error("cannot open file: " + path);
    KeyValueFile kv;
    std::string line, section;
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++row;
      std::string t = detail::trim(line);
      const auto hash = t.find('#');
      if (hash != std::string::npos) t = detail::trim(t.substr(0, hash));
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw incoherence_error(path + ":" + std::to_string(row) + ": bad section header");
        section = detail::trim(t.substr(1, t.size() - 2));
        continue;
      }
      auto eq = t.find('=');
      if (eq == std::string::npos) eq = t.find(' ');
      if (eq == std::string::npos)
        throw incoherence_error(path + ":" + std::to_string(row) + ": expected key = value");
      const std::string key = detail::trim(t.substr(0, eq));
      const std::string value = detail::trim(t.substr(eq + 1));
      if (key.empty() || value.empty())
        throw incoherence_error(path + ":" + std::to_string(row) + ": expected key = value");
      kv.sections[section][key] = value;
    }
    return kv;
  }

  bool has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key) > 0;
  }
  double number(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s == sections.end() || !s->second.count(key))
      throw incoherence_error("missing key '" + key + "' in section [" + section + "]");
    return detail::parse_double(s->second.at(key), "[" + section + "] " + key);
  }
  double number_or(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? number(section, key) : fallback;
  }
};

// Weibull prior spec file: [regression] mu0, mu1, s00, s01, s11;
// [shape] a_beta, b_beta (or beta_fixed); [location] v_eps or a_eps, b_eps.
inline WeibullDesignPrior read_weibull_prior(const std::string& path) {
  const auto kv = KeyValueFile::read(path);
  WeibullDesignPrior prior;
  prior.mu0 = kv.number("regression", "mu0");
  prior.mu1 = kv.number("regression", "mu1");
  prior.s00 = kv.number("regression", "s00");
  prior.s01 = kv.number_or("regression", "s01", 0.0);
  prior.s11 = kv.number("regression", "s11");
  if (kv.has("shape", "beta_fixed")) {
    prior.beta_fixed = kv.number("shape", "beta_fixed");
  } else {
    prior.a_beta = kv.number("shape", "a_beta");
    prior.b_beta = kv.number("shape", "b_beta");
  }
  if (kv.has("location", "a_eps") || kv.has("location", "b_eps")) {
    prior.learn_v_eps = true;
    prior.a_eps = kv.number("location", "a_eps");
    prior.b_eps = kv.number("location", "b_eps");
  } else {
    prior.v_eps = kv.number_or("location", "v_eps", 0.0);
  }
  prior.validate();
  return prior;
}

inline void write_weibull_prior(const std::string& path, const WeibullDesignPrior& prior) {
  std::ofstream out(path);
  if (!out) throw incoherence_error("cannot write prior file: " + path);
  out << "[regression]\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "mu0 = " << num(prior.mu0) << "\nmu1 = " << num(prior.mu1) << "\n";
  out << "s00 = " << num(prior.s00) << "\ns01 = " << num(prior.s01)
      << "\ns11 = " << num(prior.s11) << "\n\n[shape]\n";
  if (prior.beta_fixed) {
    out << "beta_fixed = " << num(*prior.beta_fixed) << "\n";
  } else {
    out << "a_beta = " << num(prior.a_beta) << "\nb_beta = " << num(prior.b_beta) << "\n";
  }
  out << "\n[location]\n";
  if (prior.learn_v_eps)
    out << "a_eps = " << num(prior.a_eps) << "\nb_eps = " << num(prior.b_eps) << "\n";
  else
    out << "v_eps = " << num(prior.v_eps) << "\n";
}

// %.{sig}g formatting shared by every TSV writer, so outputs are byte-stable.
inline std::string format_sig(double v, int significant = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, v);
  return std::string(buf);
}

}  // namespace rdt
