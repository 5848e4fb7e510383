#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cvomp/error.hpp"
#include "cvomp/experiments.hpp"

namespace cvomp {

namespace {

constexpr std::array kAllExperiments{ExperimentName::lemma_validation, ExperimentName::theorem4_validation,
                                     ExperimentName::mcv_sweep, ExperimentName::tradeoff_sweep,
                                     ExperimentName::noise_sweep};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError("cannot parse value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(std::string_view key, std::string_view text) {
  std::vector<T> out;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<T>(key, text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  if (out.empty()) throw ConfigError("key '" + std::string(key) + "' needs a non-empty list");
  return out;
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>) {
      s += format_double(v[i]);
    } else {
      s += std::to_string(v[i]);
    }
  }
  return s;
}

struct Field {
  const char* key;
  std::string (*get)(const ExperimentConfig&);
  void (*set)(ExperimentConfig&, std::string_view);
};

#define CVOMP_INT_FIELD(name)                                                           \
  Field {                                                                               \
    #name, [](const ExperimentConfig& c) { return std::to_string(c.name); },           \
        [](ExperimentConfig& c, std::string_view v) { c.name = parse_number<Index>(#name, v); } \
  }
#define CVOMP_REAL_FIELD(name)                                                          \
  Field {                                                                               \
    #name, [](const ExperimentConfig& c) { return format_double(c.name); },            \
        [](ExperimentConfig& c, std::string_view v) { c.name = parse_number<double>(#name, v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      Field{"seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
            [](ExperimentConfig& c, std::string_view v) { c.seed = parse_number<std::uint64_t>("seed", v); }},
      CVOMP_INT_FIELD(trials),
      CVOMP_INT_FIELD(resamples),
      CVOMP_INT_FIELD(bins),
      Field{"ensemble", [](const ExperimentConfig& c) { return c.ensemble; },
            [](ExperimentConfig& c, std::string_view v) { c.ensemble = std::string(trim(v)); }},
      CVOMP_INT_FIELD(N),
      CVOMP_INT_FIELD(m),
      CVOMP_INT_FIELD(m_cv),
      CVOMP_INT_FIELD(k),
      CVOMP_INT_FIELD(d),
      CVOMP_INT_FIELD(M),
      CVOMP_REAL_FIELD(sigma_n),
      CVOMP_REAL_FIELD(sigma_n_sq),
      CVOMP_INT_FIELD(p_iter),
      CVOMP_INT_FIELD(q_iter),
      CVOMP_REAL_FIELD(lambda0),
      CVOMP_REAL_FIELD(beta5_eff),
      CVOMP_REAL_FIELD(no_prior_tolerance),
      Field{"m_cv_grid", [](const ExperimentConfig& c) { return join(c.m_cv_grid); },
            [](ExperimentConfig& c, std::string_view v) { c.m_cv_grid = parse_list<Index>("m_cv_grid", v); }},
      Field{"sigma_n_grid", [](const ExperimentConfig& c) { return join(c.sigma_n_grid); },
            [](ExperimentConfig& c, std::string_view v) { c.sigma_n_grid = parse_list<double>("sigma_n_grid", v); }},
      Field{"sigma_n_sq_grid", [](const ExperimentConfig& c) { return join(c.sigma_n_sq_grid); },
            [](ExperimentConfig& c, std::string_view v) {
              c.sigma_n_sq_grid = parse_list<double>("sigma_n_sq_grid", v);
            }},
  };
  return table;
}

#undef CVOMP_INT_FIELD
#undef CVOMP_REAL_FIELD

const Field& field(std::string_view key) {
  for (const auto& f : fields())
    if (key == f.key) return f;
  throw ConfigError("unknown key '" + std::string(key) + "'");
}

[[noreturn]] void invalid(const ExperimentConfig& c, const std::string& what) {
  throw ConfigError(to_string(c.name) + ": requires " + what);
}

}  // namespace

std::string to_string(ExperimentName name) {
  switch (name) {
    case ExperimentName::lemma_validation: return "lemma_validation";
    case ExperimentName::theorem4_validation: return "theorem4_validation";
    case ExperimentName::mcv_sweep: return "mcv_sweep";
    case ExperimentName::tradeoff_sweep: return "tradeoff_sweep";
    case ExperimentName::noise_sweep: return "noise_sweep";
  }
  return "unknown";
}

ExperimentName parse_experiment(std::string_view name) {
  for (auto e : kAllExperiments)
    if (name == to_string(e)) return e;
  std::string known;
  for (auto e : kAllExperiments) known += (known.empty() ? "" : ", ") + to_string(e);
  throw ConfigError("unknown experiment '" + std::string(name) + "' (known: " + known + ")");
}

std::span<const ExperimentName> all_experiments() { return kAllExperiments; }

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return {buf, ptr};
}

ExperimentConfig ExperimentConfig::defaults(ExperimentName name) {
  ExperimentConfig c;
  c.name = name;
  switch (name) {
    case ExperimentName::lemma_validation:
      c.N = 512;
      c.m = 96;
      c.m_cv = 48;
      c.k = 50;
      c.sigma_n = 0.1;
      c.trials = 1;
      break;
    case ExperimentName::theorem4_validation:
      c.N = 1000;
      c.m = 400;
      c.k = 50;
      c.d = 150;
      c.m_cv_grid = {48, 64, 80, 96};
      c.sigma_n_grid = {0.05, 0.1};
      break;
    case ExperimentName::mcv_sweep:
      c.m = 360;
      c.sigma_n_sq = 0.1;
      for (Index v = 10; v <= 80; v += 10) c.m_cv_grid.push_back(v);
      break;
    case ExperimentName::tradeoff_sweep:
      c.M = 400;
      c.sigma_n_sq = 0.1;
      for (Index v = 100; v >= 10; v -= 10) c.m_cv_grid.push_back(v);
      break;
    case ExperimentName::noise_sweep:
      c.M = 400;
      c.m_cv = 48;
      for (int i = 1; i <= 10; ++i) c.sigma_n_sq_grid.push_back(0.02 * i);
      break;
  }
  return c;
}

std::vector<std::string> ExperimentConfig::keys() const {
  switch (name) {
    case ExperimentName::lemma_validation:
      return {"seed", "ensemble", "N", "m", "m_cv", "k", "sigma_n", "p_iter", "q_iter", "resamples", "bins"};
    case ExperimentName::theorem4_validation:
      return {"seed", "trials", "ensemble", "N", "m", "k", "d", "m_cv_grid", "sigma_n_grid", "lambda0", "beta5_eff"};
    case ExperimentName::mcv_sweep:
      return {"seed", "trials", "ensemble", "N", "m", "k", "d", "sigma_n_sq", "m_cv_grid"};
    case ExperimentName::tradeoff_sweep:
      return {"seed", "trials", "ensemble", "N", "M", "k", "d", "sigma_n_sq", "m_cv_grid"};
    case ExperimentName::noise_sweep:
      return {"seed", "trials", "ensemble", "N", "M", "m_cv", "k", "d", "sigma_n_sq_grid", "no_prior_tolerance"};
  }
  return {};
}

bool ExperimentConfig::accepts(std::string_view key) const {
  const auto k = keys();
  return std::find(k.begin(), k.end(), key) != k.end();
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  if (!accepts(key)) {
    std::string allowed;
    for (const auto& k : keys()) allowed += (allowed.empty() ? "" : ", ") + k;
    throw ConfigError("unknown key '" + std::string(key) + "' for " + to_string(name) + " (allowed: " + allowed + ")");
  }
  field(key).set(*this, value);
}

std::string ExperimentConfig::get(std::string_view key) const { return field(key).get(*this); }

void ExperimentConfig::validate() const {
  auto dims_ok = [&](Index m_rows, const char* label) {
    if (k < 1) invalid(*this, "k >= 1");
    if (k > m_rows) invalid(*this, std::string("k <= ") + label);
    if (m_rows > N) invalid(*this, std::string(label) + " <= N");
  };
  try {
    (void)MatrixEnsemble::parse(ensemble, 1);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (name != ExperimentName::lemma_validation && trials < 1) invalid(*this, "trials >= 1");

  switch (name) {
    case ExperimentName::lemma_validation:
      dims_ok(m, "m");
      if (m_cv < 1) invalid(*this, "m_cv >= 1");
      if (!(sigma_n >= 0.0)) invalid(*this, "sigma_n >= 0");
      if (!(p_iter >= 1 && p_iter < q_iter && q_iter <= m)) invalid(*this, "1 <= p_iter < q_iter <= m");
      if (resamples < 1) invalid(*this, "resamples >= 1");
      if (bins < 1) invalid(*this, "bins >= 1");
      break;
    case ExperimentName::theorem4_validation:
      dims_ok(m, "m");
      if (!(d > k && d <= m)) invalid(*this, "k < d <= m");
      if (m_cv_grid.empty() || sigma_n_grid.empty()) invalid(*this, "non-empty m_cv_grid and sigma_n_grid");
      for (Index v : m_cv_grid)
        if (!(static_cast<double>(v) > 2.0 * lambda0 * lambda0))
          invalid(*this, "every m_cv > 2 lambda0^2 (got m_cv=" + std::to_string(v) + ")");
      for (double s : sigma_n_grid)
        if (!(s >= 0.0)) invalid(*this, "sigma_n >= 0");
      if (!(beta5_eff >= 0.0 && beta5_eff <= 1.0)) invalid(*this, "0 <= beta5_eff <= 1");
      break;
    case ExperimentName::mcv_sweep:
      dims_ok(m, "m");
      if (!(d >= 1 && d <= m)) invalid(*this, "1 <= d <= m");
      if (m_cv_grid.empty()) invalid(*this, "non-empty m_cv_grid");
      for (Index v : m_cv_grid)
        if (v < 1) invalid(*this, "every m_cv >= 1");
      if (!(sigma_n_sq >= 0.0)) invalid(*this, "sigma_n_sq >= 0");
      break;
    case ExperimentName::tradeoff_sweep:
      dims_ok(M, "M");
      if (m_cv_grid.empty()) invalid(*this, "non-empty m_cv_grid");
      for (Index v : m_cv_grid) {
        if (v < 1) invalid(*this, "every m_cv >= 1");
        if (M - v < std::max(d, k)) invalid(*this, "M - m_cv >= max(d, k) for every m_cv");
      }
      if (d < 1) invalid(*this, "d >= 1");
      if (!(sigma_n_sq >= 0.0)) invalid(*this, "sigma_n_sq >= 0");
      break;
    case ExperimentName::noise_sweep:
      dims_ok(M, "M");
      if (m_cv < 1) invalid(*this, "m_cv >= 1");
      if (d < 1 || M - m_cv < std::max(d, k)) invalid(*this, "M - m_cv >= max(d, k)");
      if (sigma_n_sq_grid.empty()) invalid(*this, "non-empty sigma_n_sq_grid");
      for (double s : sigma_n_sq_grid)
        if (!(s >= 0.0)) invalid(*this, "sigma_n_sq >= 0");
      if (!(no_prior_tolerance >= 0.0)) invalid(*this, "no_prior_tolerance >= 0");
      break;
  }
}

std::string ExperimentConfig::echo() const {
  std::string out = "experiment=" + to_string(name) + "\n";
  for (const auto& k : keys()) out += k + "=" + get(k) + "\n";
  return out;
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : echo()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  const auto key = trim(assignment.substr(0, eq));
  const auto value = trim(assignment.substr(eq + 1));
  if (key == "experiment") {
    if (parse_experiment(value) != config.name)
      throw ConfigError("config is for " + std::string(value) + ", not " + to_string(config.name));
    return;
  }
  config.set(key, value);
}

void apply_config_text(ExperimentConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      apply_override(config, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(config, ss.str());
}

}  // namespace cvomp
