#include "smi/output.hpp"

#include "smi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace smi {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Trim to the shortest representation that round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

std::uint64_t config_hash(const std::string& serialized) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialized) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string serialize_config(const std::map<std::string, std::string>& kv) {
  std::ostringstream out;
  for (const auto& [k, v] : kv) out << k << "=" << v << "\n";
  return out.str();
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF only
  if (!out) throw ParseError("cannot open output file " + path);
  return out;
}

void write_stamp(std::ofstream& out, std::uint64_t seed, std::uint64_t hash) {
  out << "# smi seed=" << seed << " config_hash=" << hash << "\n";
}

}  // namespace

void write_risk_csv(const std::string& path, const std::vector<RiskEstimate>& rows,
                    std::uint64_t master_seed, std::uint64_t cfg_hash) {
  auto out = open_out(path);
  write_stamp(out, master_seed, cfg_hash);
  out << "delta,estimator,risk,std_err,n_reps\n";
  for (const auto& r : rows)
    out << format_double(r.delta) << "," << r.estimator << "," << format_double(r.risk)
        << "," << format_double(r.std_err) << "," << r.n_reps << "\n";
}

namespace {

// delta -> estimator -> risk
std::map<double, std::map<std::string, double>> pivot(
    const std::vector<RiskEstimate>& rows) {
  std::map<double, std::map<std::string, double>> grid;
  for (const auto& r : rows) grid[r.delta][r.estimator] = r.risk;
  return grid;
}

}  // namespace

void write_fig3_csv(const std::string& path, const std::vector<RiskEstimate>& rows,
                    std::uint64_t master_seed, std::uint64_t cfg_hash) {
  auto out = open_out(path);
  write_stamp(out, master_seed, cfg_hash);
  out << "delta,exact,cut,smp\n";
  for (const auto& [delta, by_est] : pivot(rows)) {
    out << format_double(delta);
    for (const char* est : {"exact", "cut", "smp"}) {
      auto it = by_est.find(est);
      out << "," << (it == by_est.end() ? "" : format_double(it->second));
    }
    out << "\n";
  }
}

void write_table1_csv(const std::string& path, const std::vector<RiskEstimate>& rows,
                      std::uint64_t master_seed, std::uint64_t cfg_hash) {
  auto grid = pivot(rows);
  auto out = open_out(path);
  write_stamp(out, master_seed, cfg_hash);
  out << "method";
  for (const auto& [delta, by_est] : grid) out << "," << format_double(delta);
  out << "\n";
  const std::pair<const char*, const char*> methods[] = {
      {"Cut", "cut"}, {"Exact", "exact"}, {"SMP", "smp"}};
  for (const auto& [label, key] : methods) {
    out << label;
    for (const auto& [delta, by_est] : grid) {
      auto it = by_est.find(key);
      out << "," << (it == by_est.end() ? "" : format_double(100.0 * it->second));
    }
    out << "\n";
  }
}

MarginalCurve kde_curve(const std::string& country, const std::string& posterior,
                        const VectorXd& samples, double lo, double hi,
                        Eigen::Index grid_points) {
  MarginalCurve curve;
  curve.country = country;
  curve.posterior = posterior;
  const Eigen::Index n = samples.size();
  double mean = samples.mean();
  double sd = std::sqrt((samples.array() - mean).square().sum() /
                        std::max<double>(1.0, double(n - 1)));
  double bw = 1.06 * sd * std::pow(double(n), -0.2);
  if (!(bw > 0.0)) bw = 1e-3 * (hi - lo);
  curve.grid.resize(grid_points);
  curve.density.resize(grid_points);
  for (Eigen::Index g = 0; g < grid_points; ++g) {
    double x = lo + (hi - lo) * double(g) / double(grid_points - 1);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double z = (x - samples[i]) / bw;
      acc += std::exp(-0.5 * z * z);
    }
    curve.grid[g] = x;
    curve.density[g] = acc / (double(n) * bw * std::sqrt(2.0 * M_PI));
  }
  return curve;
}

void write_hpv_marginals_csv(const std::string& path,
                             const std::vector<MarginalCurve>& curves,
                             std::uint64_t master_seed, std::uint64_t cfg_hash) {
  auto out = open_out(path);
  write_stamp(out, master_seed, cfg_hash);
  out << "country,posterior,grid_point,density,omega_plus\n";
  for (const auto& c : curves)
    for (size_t g = 0; g < c.grid.size(); ++g)
      out << c.country << "," << c.posterior << "," << format_double(c.grid[g]) << ","
          << format_double(c.density[g]) << "," << format_double(c.omega_plus) << "\n";
}

void write_run_meta(const std::string& path,
                    const std::map<std::string, std::string>& config,
                    std::uint64_t master_seed, std::uint64_t cfg_hash,
                    const std::vector<std::string>& outputs) {
  auto out = open_out(path);
  out << "{\n";
  out << "  \"tool\": \"smi\",\n";
  out << "  \"version\": \"0.1.0\",\n";
  out << "  \"master_seed\": " << master_seed << ",\n";
  out << "  \"config_hash\": " << cfg_hash << ",\n";
  out << "  \"rng\": \"" << rng_identity() << "\",\n";
  out << "  \"seed_rule\": \"replication r of grid cell i uses "
         "derive_seed(master_seed, {i, r})\",\n";
  out << "  \"config\": {\n";
  bool first = true;
  for (const auto& [k, v] : config) {
    if (!first) out << ",\n";
    first = false;
    out << "    \"" << k << "\": \"" << v << "\"";
  }
  out << "\n  },\n";
  out << "  \"outputs\": [";
  for (size_t i = 0; i < outputs.size(); ++i)
    out << (i ? ", " : "") << "\"" << outputs[i] << "\"";
  out << "]\n}\n";
}

void write_risk_svg(const std::string& path, const std::vector<RiskEstimate>& rows,
                    const std::string& title) {
  auto grid = pivot(rows);
  if (grid.empty()) return;
  double xmin = grid.begin()->first, xmax = grid.rbegin()->first;
  double ymax = 0.0;
  for (const auto& r : rows) ymax = std::max(ymax, r.risk);
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= 0.0) ymax = 1.0;

  const double w = 640, h = 420, ml = 60, mr = 20, mt = 40, mb = 50;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto sy = [&](double y) { return h - mb - y / ymax * (h - mt - mb); };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
      << h << "\">\n";
  out << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
      << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
  const std::pair<const char*, const char*> series[] = {
      {"exact", "#1f77b4"}, {"cut", "#d62728"}, {"smp", "#2ca02c"}};
  double ly = mt;
  for (const auto& [est, color] : series) {
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [delta, by_est] : grid) {
      auto it = by_est.find(est);
      if (it == by_est.end()) continue;
      out << sx(delta) << "," << sy(it->second) << " ";
    }
    out << "\"/>\n";
    out << "<text x=\"" << w - mr - 70 << "\" y=\"" << ly + 12 << "\" fill=\"" << color
        << "\">" << est << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
}

std::vector<std::vector<std::string>> read_strict_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (content.find('\r') != std::string::npos)
    throw ParseError("strict csv: carriage return found in " + path);
  std::vector<std::vector<std::string>> rows;
  std::istringstream ss(content);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace smi
