#ifndef SMI_OUTPUT_HPP
#define SMI_OUTPUT_HPP

#include "smi/risk.hpp"

#include <map>
#include <string>
#include <vector>

namespace smi {

/// Shortest round-trip decimal form, '.' separator, no locale.
std::string format_double(double v);

/// FNV-1a over the serialized config text.
std::uint64_t config_hash(const std::string& serialized);

/// Key=value lines, keys sorted; the canonical on-disk config form.
std::string serialize_config(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::string& path);

/// risk.csv: `delta,estimator,risk,std_err,n_reps` preceded by one comment
/// line carrying the master seed and config hash.
void write_risk_csv(const std::string& path, const std::vector<RiskEstimate>& rows,
                    std::uint64_t master_seed, std::uint64_t cfg_hash);

/// Wide plot-data file: delta,exact,cut,smp.
void write_fig3_csv(const std::string& path, const std::vector<RiskEstimate>& rows,
                    std::uint64_t master_seed, std::uint64_t cfg_hash);

/// Table layout: one row per method, one column per delta, risk times 100.
void write_table1_csv(const std::string& path, const std::vector<RiskEstimate>& rows,
                      std::uint64_t master_seed, std::uint64_t cfg_hash);

struct MarginalCurve {
  std::string country;
  std::string posterior;  // cut | exact | smp
  std::vector<double> grid;
  std::vector<double> density;
  double omega_plus = 0.0;
};

void write_hpv_marginals_csv(const std::string& path,
                             const std::vector<MarginalCurve>& curves,
                             std::uint64_t master_seed, std::uint64_t cfg_hash);

/// Gaussian kernel density estimate with Silverman bandwidth, evaluated on
/// an equispaced grid.
MarginalCurve kde_curve(const std::string& country, const std::string& posterior,
                        const VectorXd& samples, double lo, double hi,
                        Eigen::Index grid_points);

void write_run_meta(const std::string& path,
                    const std::map<std::string, std::string>& config,
                    std::uint64_t master_seed, std::uint64_t cfg_hash,
                    const std::vector<std::string>& outputs);

/// Minimal SVG line chart of risk-vs-delta curves (one polyline per
/// estimator).
void write_risk_svg(const std::string& path, const std::vector<RiskEstimate>& rows,
                    const std::string& title);

/// Strict reader for our CSV outputs: LF line endings, '.' decimals, leading
/// '#' comment lines skipped.  Returns rows of fields.
std::vector<std::vector<std::string>> read_strict_csv(const std::string& path);

}  // namespace smi

#endif  // SMI_OUTPUT_HPP
