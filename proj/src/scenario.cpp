#include "evroute/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace evroute {

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  std::ostringstream os;
  os << origin << ':' << line << ": " << msg;
  throw ScenarioError(ScenarioError::Code::parse_error, os.str());
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
};

using KeyMap = std::map<std::string, Entry>;

double parse_number(const std::string& tok, bool allow_inf, const std::string& origin, int line,
                    const std::string& field) {
  if (tok == "inf") {
    if (!allow_inf) fail(origin, line, "field '" + field + "' does not accept 'inf'");
    return kUnreachable;
  }
  try {
    size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) fail(origin, line, "field '" + field + "': bad number '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(origin, line, "field '" + field + "': bad number '" + tok + "'");
  }
}

long parse_integer(const std::string& tok, const std::string& origin, int line,
                   const std::string& field) {
  try {
    size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) fail(origin, line, "field '" + field + "': bad integer '" + tok + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(origin, line, "field '" + field + "': bad integer '" + tok + "'");
  }
}

std::vector<double> parse_vector(const Entry& e, int n, bool allow_inf, const std::string& origin,
                                 const std::string& field) {
  const std::vector<std::string> toks = split_ws(e.value);
  if (static_cast<int>(toks.size()) != n) {
    std::ostringstream os;
    os << "field '" << field << "' needs " << n << " entries, got " << toks.size();
    fail(origin, e.line, os.str());
  }
  std::vector<double> out;
  out.reserve(toks.size());
  for (const std::string& t : toks) out.push_back(parse_number(t, allow_inf, origin, e.line, field));
  return out;
}

Matrix parse_matrix(const Entry& e, int rows, int cols, bool allow_inf, const std::string& origin,
                    const std::string& field) {
  const std::vector<std::string> row_strs = split_on(e.value, ';');
  Matrix m;
  if (static_cast<int>(row_strs.size()) == rows) {
    for (const std::string& rs : row_strs) {
      const std::vector<std::string> toks = split_ws(rs);
      if (static_cast<int>(toks.size()) != cols) {
        std::ostringstream os;
        os << "field '" << field << "' row needs " << cols << " entries, got " << toks.size();
        fail(origin, e.line, os.str());
      }
      std::vector<double> row;
      row.reserve(cols);
      for (const std::string& t : toks) row.push_back(parse_number(t, allow_inf, origin, e.line, field));
      m.push_back(std::move(row));
    }
    return m;
  }
  if (row_strs.size() == 1) {  // flat row-major
    const std::vector<std::string> toks = split_ws(row_strs[0]);
    if (static_cast<int>(toks.size()) == rows * cols) {
      for (int i = 0; i < rows; ++i) {
        std::vector<double> row;
        row.reserve(cols);
        for (int j = 0; j < cols; ++j)
          row.push_back(parse_number(toks[static_cast<size_t>(i) * cols + j], allow_inf, origin,
                                     e.line, field));
        m.push_back(std::move(row));
      }
      return m;
    }
  }
  std::ostringstream os;
  os << "field '" << field << "' needs " << rows << " rows of " << cols
     << " entries (';' separated) or " << (rows * cols) << " flat entries";
  fail(origin, e.line, os.str());
}

DistributionFamily parse_family(const Entry& e, const std::string& origin, const std::string& field) {
  if (e.value == "exponential") return DistributionFamily::exponential;
  if (e.value == "deterministic") return DistributionFamily::deterministic;
  if (e.value == "uniform") return DistributionFamily::uniform;
  fail(origin, e.line, "field '" + field + "': unknown family '" + e.value + "'");
}

const Entry* find(const KeyMap& keys, const std::string& key) {
  auto it = keys.find(key);
  return it == keys.end() ? nullptr : &it->second;
}

const Entry& need(const KeyMap& keys, const std::string& key, const std::string& origin) {
  const Entry* e = find(keys, key);
  if (e == nullptr) {
    throw ScenarioError(ScenarioError::Code::parse_error,
                        origin + ": missing required field '" + key + "'");
  }
  return *e;
}

}  // namespace

std::vector<std::string> preset_names() { return {"toy-s6", "example-a", "example-b"}; }

Scenario load_preset(const std::string& name) {
  Scenario s;
  s.name = name;
  NetworkSpec net;
  if (name == "toy-s6") {
    net.ev_types = 2;
    net.charger_types = 3;
    net.arrival_rates = {50.0, 44.0};
    net.service_rates = {{1.0, 3.0, 0.0}, {0.0, 1.0, 2.0}};
    net.costs = {{0.0, 0.0, kUnreachable}, {kUnreachable, 0.0, 0.0}};
    net.pool_sizes = {20, 20, 20};
    s.spec = validate_spec(net);
    s.config.policy = PolicyKind::gpd;
    s.config.beta = 0.01;
    s.config.horizon_arrivals = 10000;
    s.config.grid_dt = 0.5;
    s.config.rate_switch = RateSwitch{5000, {44.0, 50.0}};
    s.config.clusters.members = {{0, 1, 2}};
    s.config.clusters.weights = {10.0};
    s.seeds.base = 1;
    return s;
  }
  if (name == "example-a") {
    net.ev_types = 2;
    net.charger_types = 2;
    net.arrival_rates = {1.0, 1.2};
    net.service_rates = {{1.0, 0.0}, {1.0, 1.0}};
    net.costs = {{0.0, kUnreachable}, {1.0, 2.0}};
    net.pool_sizes = {2, 2};
    s.spec = validate_spec(net);
    s.config.policy = PolicyKind::gpd;
    s.config.beta = 0.1;
    s.config.horizon_arrivals = 2000;
    s.config.grid_dt = 0.5;
    s.seeds.base = 1;
    return s;
  }
  if (name == "example-b") {
    net.ev_types = 2;
    net.charger_types = 2;
    net.arrival_rates = {3.0, 1.0};
    net.service_rates = {{1.0, 2.0}, {1.0, 1.0}};
    net.costs = {{1.0, 2.0}, {2.0, 1.0}};
    net.pool_sizes = {2, 2};
    s.spec = validate_spec(net);
    s.config.policy = PolicyKind::gpd;
    s.config.beta = 0.01;
    s.config.horizon_time = 2000.0;
    s.config.grid_dt = 1.0;
    s.seeds.base = 1;
    return s;
  }
  throw ScenarioError(ScenarioError::Code::unknown_preset, "unknown preset '" + name + "'");
}

Scenario parse_scenario_text(const std::string& text, const std::string& origin) {
  KeyMap keys;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "network" && section != "processes" && section != "seeds" && section != "sim")
        fail(origin, line_no, "unknown section '" + section + "'");
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected 'key = value'");
    if (section.empty()) fail(origin, line_no, "field outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, line_no, "empty field name");
    const std::string full = section + "." + key;
    if (keys.count(full)) fail(origin, line_no, "duplicate field '" + full + "'");
    keys[full] = Entry{value, line_no};
  }

  Scenario s;
  s.name = origin;

  NetworkSpec net;
  {
    const Entry& ei = need(keys, "network.ev_types", origin);
    const Entry& ej = need(keys, "network.charger_types", origin);
    net.ev_types = static_cast<int>(parse_integer(trim(ei.value), origin, ei.line, "ev_types"));
    net.charger_types =
        static_cast<int>(parse_integer(trim(ej.value), origin, ej.line, "charger_types"));
    if (net.ev_types < 1) fail(origin, ei.line, "ev_types must be >= 1");
    if (net.charger_types < 1) fail(origin, ej.line, "charger_types must be >= 1");
    net.arrival_rates =
        parse_vector(need(keys, "network.lambda", origin), net.ev_types, false, origin, "lambda");
    net.service_rates = parse_matrix(need(keys, "network.mu", origin), net.ev_types,
                                     net.charger_types, false, origin, "mu");
    net.costs = parse_matrix(need(keys, "network.cost", origin), net.ev_types, net.charger_types,
                             true, origin, "cost");
    const Entry& en = need(keys, "network.N", origin);
    const std::vector<double> pools = parse_vector(en, net.charger_types, false, origin, "N");
    net.pool_sizes.clear();
    for (double v : pools) {
      if (v != std::floor(v)) fail(origin, en.line, "field 'N': pool sizes must be integers");
      net.pool_sizes.push_back(static_cast<int>(v));
    }
  }
  if (const Entry* e = find(keys, "processes.arrival"))
    net.arrival_family = parse_family(*e, origin, "arrival");
  if (const Entry* e = find(keys, "processes.service"))
    net.service_family = parse_family(*e, origin, "service");
  try {
    s.spec = validate_spec(net);
  } catch (const SpecError& err) {
    throw ScenarioError(ScenarioError::Code::parse_error,
                        origin + ": invalid network: " + err.what());
  }

  if (const Entry* e = find(keys, "seeds.seed")) {
    const long v = parse_integer(trim(e->value), origin, e->line, "seed");
    if (v < 0) fail(origin, e->line, "seed must be >= 0");
    s.seeds.base = static_cast<std::uint64_t>(v);
  }

  if (const Entry* e = find(keys, "sim.policy")) {
    const std::optional<PolicyKind> kind = policy_from_name(trim(e->value));
    if (!kind) fail(origin, e->line, "unknown policy '" + trim(e->value) + "'");
    s.config.policy = *kind;
  }
  if (const Entry* e = find(keys, "sim.beta")) {
    s.config.beta = parse_number(trim(e->value), false, origin, e->line, "beta");
    if (!(s.config.beta > 0.0)) fail(origin, e->line, "beta must be positive");
  }
  if (const Entry* e = find(keys, "sim.horizon_arrivals")) {
    s.config.horizon_arrivals = parse_integer(trim(e->value), origin, e->line, "horizon_arrivals");
    if (s.config.horizon_arrivals < 0) fail(origin, e->line, "horizon_arrivals must be >= 0");
  }
  if (const Entry* e = find(keys, "sim.horizon_time")) {
    s.config.horizon_time = parse_number(trim(e->value), false, origin, e->line, "horizon_time");
    if (s.config.horizon_time < 0.0) fail(origin, e->line, "horizon_time must be >= 0");
  }
  if (const Entry* e = find(keys, "sim.grid_dt")) {
    s.config.grid_dt = parse_number(trim(e->value), false, origin, e->line, "grid_dt");
    if (!(s.config.grid_dt > 0.0)) fail(origin, e->line, "grid_dt must be positive");
  }
  const Entry* sw_at = find(keys, "sim.rate_switch_at");
  const Entry* sw_lambda = find(keys, "sim.rate_switch_lambda");
  if ((sw_at == nullptr) != (sw_lambda == nullptr)) {
    const Entry* have = sw_at ? sw_at : sw_lambda;
    fail(origin, have->line, "rate_switch_at and rate_switch_lambda must be given together");
  }
  if (sw_at != nullptr) {
    RateSwitch sw;
    sw.at_arrival = parse_integer(trim(sw_at->value), origin, sw_at->line, "rate_switch_at");
    if (sw.at_arrival < 0) fail(origin, sw_at->line, "rate_switch_at must be >= 0");
    sw.new_rates = parse_vector(*sw_lambda, net.ev_types, false, origin, "rate_switch_lambda");
    for (double v : sw.new_rates)
      if (v < 0.0) fail(origin, sw_lambda->line, "rate_switch_lambda entries must be >= 0");
    s.config.rate_switch = sw;
  }
  const Entry* cl = find(keys, "sim.clusters");
  const Entry* wt = find(keys, "sim.weights");
  if ((cl == nullptr) != (wt == nullptr)) {
    const Entry* have = cl ? cl : wt;
    fail(origin, have->line, "clusters and weights must be given together");
  }
  if (cl != nullptr) {
    ClusterSet set;
    for (const std::string& part : split_on(cl->value, ';')) {
      std::vector<int> members;
      for (const std::string& tok : split_ws(part)) {
        const long v = parse_integer(tok, origin, cl->line, "clusters");
        if (v < 1 || v > net.charger_types)
          fail(origin, cl->line, "clusters: station index out of range");
        members.push_back(static_cast<int>(v - 1));
      }
      if (members.empty()) fail(origin, cl->line, "clusters: empty cluster");
      std::sort(members.begin(), members.end());
      if (std::adjacent_find(members.begin(), members.end()) != members.end())
        fail(origin, cl->line, "clusters: repeated station");
      set.members.push_back(std::move(members));
    }
    const std::vector<double> weights =
        parse_vector(*wt, static_cast<int>(set.members.size()), false, origin, "weights");
    for (double v : weights)
      if (v < 0.0) fail(origin, wt->line, "weights must be >= 0");
    set.weights = weights;
    s.config.clusters = std::move(set);
  }
  return s;
}

Scenario load_scenario(const std::string& name_or_path) {
  std::error_code ec;
  if (std::filesystem::exists(name_or_path, ec)) {
    std::ifstream in(name_or_path);
    if (!in)
      throw ScenarioError(ScenarioError::Code::parse_error,
                          name_or_path + ": cannot open scenario file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str(), name_or_path);
  }
  const std::vector<std::string> names = preset_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end())
    return load_preset(name_or_path);
  throw ScenarioError(ScenarioError::Code::unknown_preset,
                      "'" + name_or_path + "' is neither a preset nor a readable file");
}

namespace {

std::string family_name(DistributionFamily f) {
  switch (f) {
    case DistributionFamily::exponential: return "exponential";
    case DistributionFamily::deterministic: return "deterministic";
    case DistributionFamily::uniform: return "uniform";
  }
  return "?";
}

void emit_row(std::ostream& os, const std::vector<double>& row) {
  for (size_t k = 0; k < row.size(); ++k) {
    if (k > 0) os << ' ';
    if (is_unreachable(row[k]))
      os << "inf";
    else
      os << row[k];
  }
}

void emit_matrix(std::ostream& os, const Matrix& m) {
  for (size_t r = 0; r < m.size(); ++r) {
    if (r > 0) os << " ; ";
    emit_row(os, m[r]);
  }
}

}  // namespace

std::string to_scenario_text(const Scenario& s) {
  std::ostringstream os;
  os.precision(17);
  const NetworkSpec& net = s.spec.net;
  os << "# scenario: " << s.name << '\n';
  os << "[network]\n";
  os << "ev_types = " << net.ev_types << '\n';
  os << "charger_types = " << net.charger_types << '\n';
  os << "lambda = ";
  emit_row(os, net.arrival_rates);
  os << '\n';
  os << "mu = ";
  emit_matrix(os, net.service_rates);
  os << '\n';
  os << "cost = ";
  emit_matrix(os, net.costs);
  os << '\n';
  os << "N =";
  for (int v : net.pool_sizes) os << ' ' << v;
  os << '\n';
  os << "[processes]\n";
  os << "arrival = " << family_name(net.arrival_family) << '\n';
  os << "service = " << family_name(net.service_family) << '\n';
  os << "[seeds]\n";
  os << "seed = " << s.seeds.base << '\n';
  os << "[sim]\n";
  os << "policy = " << policy_name(s.config.policy) << '\n';
  os << "beta = " << s.config.beta << '\n';
  if (s.config.horizon_arrivals > 0) os << "horizon_arrivals = " << s.config.horizon_arrivals << '\n';
  if (s.config.horizon_time > 0.0) os << "horizon_time = " << s.config.horizon_time << '\n';
  os << "grid_dt = " << s.config.grid_dt << '\n';
  if (s.config.rate_switch) {
    os << "rate_switch_at = " << s.config.rate_switch->at_arrival << '\n';
    os << "rate_switch_lambda = ";
    emit_row(os, s.config.rate_switch->new_rates);
    os << '\n';
  }
  if (s.config.clusters.count() > 0) {
    os << "clusters = ";
    for (size_t l = 0; l < s.config.clusters.members.size(); ++l) {
      if (l > 0) os << " ; ";
      for (size_t k = 0; k < s.config.clusters.members[l].size(); ++k) {
        if (k > 0) os << ' ';
        os << (s.config.clusters.members[l][k] + 1);
      }
    }
    os << '\n';
    os << "weights = ";
    emit_row(os, s.config.clusters.weights);
    os << '\n';
  }
  return os.str();
}

}  // namespace evroute
