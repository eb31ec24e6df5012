#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ellab/coefficients.hpp"
#include "ellab/geometry.hpp"
#include "ellab/norms.hpp"

namespace ellab {

/// Invalid or incomplete experiment configuration. `line` is the 1-based
/// line of the offending entry when known (0 otherwise).
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0);
    int line() const { return line_; }

private:
    int line_;
};

/// Pass/fail rule of a result row, written as "<= 1e-8", "< 0.01", ">= 1",
/// "> 0", "in [0.125, 8]", "finite" or "report" (always passes).
class Criterion {
public:
    enum class Op { kLe, kLt, kGe, kGt, kIn, kFinite, kReport };

    static Criterion parse(std::string_view text);
    static Criterion report();

    Op op() const { return op_; }
    bool check(double value) const;
    const std::string& text() const { return text_; }

private:
    Op op_ = Op::kReport;
    double a_ = 0.0;
    double b_ = 0.0;
    std::string text_ = "report";
};

inline constexpr int kResultSchemaVersion = 1;

struct ResultRow {
    std::string experiment;
    std::string case_name;
    std::string params;
    double measured = 0.0;
    std::string criterion;
    bool pass = true;
};

/// Parsed TOML experiment configuration with typed, line-aware accessors.
/// Keys are dotted paths such as "perturb_sweep.spacing".
class ExperimentConfig {
public:
    static ExperimentConfig load(const std::filesystem::path& path);
    static ExperimentConfig parse(std::string_view text, const std::string& source = "<config>");

    std::string name() const;
    /// Seed from the command line when set, otherwise the required "seed" key.
    std::uint64_t seed() const;
    void override_seed(std::uint64_t seed) { seed_override_ = seed; }
    /// "output" key, default "results".
    std::string output() const;

    bool has(const std::string& path) const;
    double number(const std::string& path, std::optional<double> fallback = std::nullopt) const;
    std::int64_t integer(const std::string& path, std::optional<std::int64_t> fallback = std::nullopt) const;
    bool boolean(const std::string& path, std::optional<bool> fallback = std::nullopt) const;
    std::string string(const std::string& path, std::optional<std::string> fallback = std::nullopt) const;
    std::vector<double> numbers(const std::string& path,
                                std::optional<std::vector<double>> fallback = std::nullopt) const;
    /// Array of number pairs, e.g. lattice points [[s, 1/p], ...].
    std::vector<std::array<double, 2>> pairs(const std::string& path) const;
    /// Array of number arrays of length n.
    std::vector<std::vector<double>> tuples(const std::string& path, std::size_t n) const;
    /// Keys of the table at `path` in sorted order (empty when absent).
    std::vector<std::string> keys(const std::string& path) const;
    /// Required entry "<section>.criteria.<key>".
    Criterion criterion(const std::string& section, const std::string& key) const;

    /// Domain from "<section>.domain" or the top-level "domain" table:
    /// preset = "unit_square" | "l_shape", or vertices = [[x, y], ...].
    PolygonalDomain domain(const std::string& section) const;
    /// Tensor table at `path`: preset = "identity" (m, components),
    /// "biharmonic" (rho), "random_constant" (m, components, scale, seed) or
    /// "diag_real_tindep" (components).
    CoefficientTensor tensor(const std::string& path) const;
    /// (p, s) points from "<section>.lattice": kind = "points" (points =
    /// [[s, 1/p], ...]), "grid" (s = [...], inv_p = [...]) or "lines"
    /// (center = [s, 1/p], half_width, count; lines of slope 1 and 1/(d-1)).
    std::vector<NormParams> lattice(const std::string& section) const;

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    std::optional<std::uint64_t> seed_override_;
};

/// Rows plus auxiliary files (name -> content) of one experiment.
struct ExperimentOutput {
    std::string experiment;
    std::vector<ResultRow> rows;
    std::map<std::string, std::string> artifacts;
    double runtime = 0.0;  // seconds; reported in the JSON summary only
};

ExperimentOutput run_garding(const ExperimentConfig& config);
ExperimentOutput run_perturb_sweep(const ExperimentConfig& config);
ExperimentOutput run_norm_suite(const ExperimentConfig& config);
ExperimentOutput run_poincare(const ExperimentConfig& config);
ExperimentOutput run_newton(const ExperimentConfig& config);
ExperimentOutput run_duality(const ExperimentConfig& config);

/// Config section of each experiment, in the order "all" runs them.
const std::vector<std::string>& experiment_names();
ExperimentOutput run_experiment(const std::string& name, const ExperimentConfig& config);

/// Header experiment,case,params,measured,criterion,pass.
void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_results_json(std::ostream& out, const std::vector<ResultRow>& rows);
/// Config name, seed, schema version, per-experiment runtimes and pass
/// counts, and the list of failed rows.
void write_summary_json(std::ostream& out, const ExperimentConfig& config,
                        const std::vector<ExperimentOutput>& outputs);

struct HeatCell {
    double s = 0.0;
    double inv_p = 0.0;
    double value = 0.0;  // in [0, 1] for the colour scale
    bool ok = true;      // false draws a cross
};

/// Self-contained SVG heat map over the (s, 1/p) plane.
std::string heat_map_svg(const std::vector<HeatCell>& cells, const std::string& title);

/// Shortest round-trip decimal form of x ("inf", "-inf", "nan" for
/// non-finite values).
std::string format_number(double x);

} // namespace ellab
