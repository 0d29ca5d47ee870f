#include "clse/trajectory.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace clse {

ParamVec TruthRecord::params() const {
  require(!values.empty() && values.size() <= kMaxParams, "truth record must hold 1..3 parameters");
  ParamVec p(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) p[static_cast<Eigen::Index>(i)] = values[i];
  return p;
}

std::optional<std::size_t> Trajectory::extinction_step() const {
  if (!is_count()) return std::nullopt;
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] == 0) return k;
  return std::nullopt;
}

void Trajectory::validate() const {
  require(!values.empty(), "trajectory must contain at least one value");
  for (double v : values) require(std::isfinite(v), "trajectory values must be finite");
  if (!is_count()) return;
  require(counts.size() == values.size(), "count and value images differ in length");
  bool dead = false;
  for (std::uint64_t c : counts) {
    if (dead) require(c == 0, "extinction is absorbing: population revived after reaching 0");
    if (c == 0) dead = true;
  }
}

Trajectory make_count_trajectory(std::string model_id, std::vector<std::uint64_t> counts, std::uint64_t seed) {
  Trajectory t;
  t.model_id = std::move(model_id);
  t.values.reserve(counts.size());
  for (auto c : counts) t.values.push_back(static_cast<double>(c));
  t.counts = std::move(counts);
  t.seed = seed;
  t.validate();
  return t;
}

Trajectory make_real_trajectory(std::string model_id, std::vector<double> values, std::uint64_t seed) {
  Trajectory t;
  t.model_id = std::move(model_id);
  t.values = std::move(values);
  t.seed = seed;
  t.validate();
  return t;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& what) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
    fail(ErrorKind::io, "cannot parse " + what + ": '" + s + "'");
  return v;
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  t.validate();
  out << "# model: " << t.model_id << "\n";
  out << "# kind: " << (t.is_count() ? "count" : "real") << "\n";
  out << "# seed: " << t.seed << "\n";
  if (t.truth) {
    out << "# truth: ";
    for (std::size_t i = 0; i < t.truth->values.size(); ++i) {
      if (i) out << ",";
      out << t.truth->names.at(i) << "=" << format_double(t.truth->values[i]);
    }
    out << "\n";
  }
  out << "step,value\n";
  for (std::size_t k = 0; k < t.values.size(); ++k) {
    out << k << ",";
    if (t.is_count())
      out << t.counts[k];
    else
      out << format_double(t.values[k]);
    out << "\n";
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  Trajectory t;
  std::string kind;
  std::string line;
  bool header = false;
  std::vector<std::string> raw;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = trim(line.substr(1, colon - 1));
      const std::string val = trim(line.substr(colon + 1));
      if (key == "model") {
        t.model_id = val;
      } else if (key == "kind") {
        kind = val;
      } else if (key == "seed") {
        if (!parse_u64(val, t.seed)) fail(ErrorKind::io, "bad seed comment: " + val);
      } else if (key == "truth") {
        TruthRecord truth;
        std::stringstream ss(val);
        std::string item;
        while (std::getline(ss, item, ',')) {
          const auto eq = item.find('=');
          if (eq == std::string::npos) fail(ErrorKind::io, "bad truth entry: " + item);
          truth.names.push_back(trim(item.substr(0, eq)));
          truth.values.push_back(parse_double(trim(item.substr(eq + 1)), "truth value"));
        }
        t.truth = std::move(truth);
      }
      continue;
    }
    if (!header) {
      if (line != "step,value") fail(ErrorKind::io, "expected header 'step,value', got '" + line + "'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorKind::io, "malformed row: " + line);
    std::uint64_t step = 0;
    if (!parse_u64(trim(line.substr(0, comma)), step) || step != raw.size())
      fail(ErrorKind::io, "rows must be numbered 0..n in order: " + line);
    raw.push_back(trim(line.substr(comma + 1)));
  }
  if (!header) fail(ErrorKind::io, "missing 'step,value' header");
  if (raw.empty()) fail(ErrorKind::io, "trajectory file has no rows");

  bool counts = kind == "count";
  if (kind.empty()) {
    counts = true;
    std::uint64_t tmp = 0;
    for (const auto& r : raw)
      if (!parse_u64(r, tmp)) counts = false;
  }
  if (counts) {
    t.counts.reserve(raw.size());
    for (const auto& r : raw) {
      std::uint64_t c = 0;
      if (!parse_u64(r, c)) fail(ErrorKind::io, "count trajectory holds a non-integer value: " + r);
      t.counts.push_back(c);
      t.values.push_back(static_cast<double>(c));
    }
  } else {
    for (const auto& r : raw) t.values.push_back(parse_double(r, "value"));
  }
  try {
    t.validate();
  } catch (const Error& e) {
    fail(ErrorKind::io, std::string("invalid trajectory file: ") + e.what());
  }
  return t;
}

void save_trajectory(const std::string& path, const Trajectory& t) {
  std::ostringstream ss;
  write_trajectory_csv(ss, t);
  write_file_atomic(path, ss.str());
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open trajectory file: " + path);
  return read_trajectory_csv(in);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) fail(ErrorKind::io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorKind::io, "cannot move output into place: " + path);
  }
}

}  // namespace clse
