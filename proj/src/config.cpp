#include "baxq/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace baxq {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) throw ModelError("empty numeric value");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw ModelError("bad numeric value: " + s);
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string format_complex(Complex z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
  return buf;
}

Complex parse_complex(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) throw ModelError("empty complex value");
  if (s.back() != 'i') return Complex(parse_double(s), 0.0);
  const std::string body = s.substr(0, s.size() - 1);
  // Split at the last sign that is not an exponent sign and not leading.
  size_t pos = std::string::npos;
  for (size_t i = body.size(); i-- > 1;) {
    if ((body[i] == '+' || body[i] == '-') &&
        body[i - 1] != 'e' && body[i - 1] != 'E') {
      pos = i;
      break;
    }
  }
  if (pos == std::string::npos)
    throw ModelError("bad complex value (want re+imi): " + raw);
  return Complex(parse_double(body.substr(0, pos)),
                 parse_double(body.substr(pos)));
}

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  cfg.params = ModelParams::defaults();
  return cfg;
}

void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value) {
  ModelParams& p = cfg.params;
  if (key == "q") {
    p.q = parse_complex(value);
  } else if (key == "phi") {
    p.phi = parse_double(value);
  } else if (key == "L") {
    p.L = static_cast<int>(parse_double(value));
  } else if (key == "lambda_grid") {
    std::vector<Complex> grid;
    for (const std::string& item : split_list(value))
      grid.push_back(parse_complex(item));
    if (grid.empty()) throw ModelError("lambda_grid must be nonempty");
    p.lambda_grid = std::move(grid);
  } else if (key == "trunc_N") {
    p.trunc_N = static_cast<int>(parse_double(value));
  } else if (key == "tol_rel") {
    p.tol_rel = parse_double(value);
  } else if (key == "tol_limit") {
    p.tol_limit = parse_double(value);
  } else if (key == "seed") {
    char* end = nullptr;
    p.seed = std::strtoull(value.c_str(), &end, 10);
    if (end != value.c_str() + value.size())
      throw ModelError("bad seed: " + value);
  } else if (key == "lax_pin") {
    p.lax_pin = value;
  } else if (key == "branch") {
    p.branch = value;
  } else if (key == "sector_filter") {
    p.sector_filter = value;
  } else if (key == "relations") {
    cfg.relations = split_list(value);
  } else if (key == "j_list") {
    std::vector<double> js;
    for (const std::string& item : split_list(value))
      js.push_back(parse_double(item));
    cfg.j_list = std::move(js);
  } else if (key == "sweep_key") {
    cfg.sweep_key = value;
  } else if (key == "sweep_values") {
    cfg.sweep_values = split_list(value);
  } else if (key == "out_matrices") {
    if (value == "true")
      cfg.out_matrices = true;
    else if (value == "false")
      cfg.out_matrices = false;
    else
      throw ModelError("out_matrices must be true or false");
  } else {
    throw ModelError("unknown config key: " + key);
  }
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg = RunConfig::defaults();
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ModelError("config line " + std::to_string(lineno) +
                       " is not key=value: " + t);
    apply_override(cfg, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ModelError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  const ModelParams& p = cfg.params;
  std::ostringstream os;
  os << "q=" << format_complex(p.q) << "\n";
  os << "phi=" << fmt_double(p.phi) << "\n";
  os << "L=" << p.L << "\n";
  os << "lambda_grid=";
  for (size_t i = 0; i < p.lambda_grid.size(); ++i)
    os << (i ? "," : "") << format_complex(p.lambda_grid[i]);
  os << "\n";
  os << "trunc_N=" << p.trunc_N << "\n";
  os << "tol_rel=" << fmt_double(p.tol_rel) << "\n";
  os << "tol_limit=" << fmt_double(p.tol_limit) << "\n";
  os << "seed=" << p.seed << "\n";
  os << "lax_pin=" << p.lax_pin << "\n";
  os << "branch=" << p.branch << "\n";
  os << "sector_filter=" << p.sector_filter << "\n";
  os << "relations=";
  for (size_t i = 0; i < cfg.relations.size(); ++i)
    os << (i ? "," : "") << cfg.relations[i];
  os << "\n";
  os << "j_list=";
  for (size_t i = 0; i < cfg.j_list.size(); ++i)
    os << (i ? "," : "") << fmt_double(cfg.j_list[i]);
  os << "\n";
  os << "sweep_key=" << cfg.sweep_key << "\n";
  os << "sweep_values=";
  for (size_t i = 0; i < cfg.sweep_values.size(); ++i)
    os << (i ? "," : "") << cfg.sweep_values[i];
  os << "\n";
  os << "out_matrices=" << (cfg.out_matrices ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace baxq
