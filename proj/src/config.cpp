#include "ellab/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

namespace ellab {

ConfigError::ConfigError(const std::string& what, int line)
    : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line)
{
}

std::string format_number(double x)
{
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& s)
{
    const std::string t = trim(s);
    if (t == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw InvalidArgument("criterion: bad number '" + t + "'");
    }
    if (used != t.size()) {
        throw InvalidArgument("criterion: bad number '" + t + "'");
    }
    return v;
}

} // namespace

Criterion Criterion::parse(std::string_view text)
{
    Criterion c;
    const std::string t = trim(text);
    c.text_ = t;
    if (t == "finite") {
        c.op_ = Op::kFinite;
        return c;
    }
    if (t == "report") {
        c.op_ = Op::kReport;
        return c;
    }
    if (t.rfind("in", 0) == 0) {
        const auto lb = t.find('[');
        const auto comma = t.find(',');
        const auto rb = t.find(']');
        if (lb == std::string::npos || comma == std::string::npos || rb == std::string::npos || !(lb < comma) ||
            !(comma < rb)) {
            throw InvalidArgument("criterion: expected 'in [a, b]', got '" + t + "'");
        }
        c.op_ = Op::kIn;
        c.a_ = parse_double(t.substr(lb + 1, comma - lb - 1));
        c.b_ = parse_double(t.substr(comma + 1, rb - comma - 1));
        return c;
    }
    static const std::pair<const char*, Op> ops[] = {{"<=", Op::kLe}, {">=", Op::kGe}, {"<", Op::kLt}, {">", Op::kGt}};
    for (const auto& [sym, op] : ops) {
        const std::string_view s(sym);
        if (t.rfind(s, 0) == 0) {
            c.op_ = op;
            c.a_ = parse_double(t.substr(s.size()));
            return c;
        }
    }
    throw InvalidArgument("criterion: cannot parse '" + t + "'");
}

Criterion Criterion::report()
{
    return {};
}

bool Criterion::check(double v) const
{
    switch (op_) {
    case Op::kLe:
        return v <= a_;
    case Op::kLt:
        return v < a_;
    case Op::kGe:
        return v >= a_;
    case Op::kGt:
        return v > a_;
    case Op::kIn:
        return v >= a_ && v <= b_;
    case Op::kFinite:
        return std::isfinite(v);
    case Op::kReport:
        return true;
    }
    return false;
}

struct ExperimentConfig::Impl {
    toml::table table;
    std::string source;
};

namespace {

int line_of(const toml::node& n)
{
    return static_cast<int>(n.source().begin.line);
}

toml::node_view<const toml::node> lookup(const toml::table& t, const std::string& path)
{
    return t.at_path(path);
}

double as_double(const toml::node& n, const std::string& path)
{
    if (const auto* f = n.as_floating_point()) {
        return f->get();
    }
    if (const auto* i = n.as_integer()) {
        return static_cast<double>(i->get());
    }
    if (const auto* s = n.as_string()) {
        if (s->get() == "inf") {
            return std::numeric_limits<double>::infinity();
        }
    }
    throw ConfigError("'" + path + "' must be a number", line_of(n));
}

} // namespace

ExperimentConfig ExperimentConfig::parse(std::string_view text, const std::string& source)
{
    auto impl = std::make_shared<Impl>();
    impl->source = source;
    try {
        impl->table = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        throw ConfigError(source + ": " + std::string(e.description()), static_cast<int>(e.source().begin.line));
    }
    ExperimentConfig c;
    c.impl_ = std::move(impl);
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string ExperimentConfig::name() const
{
    return string("name", std::string("experiment"));
}

std::uint64_t ExperimentConfig::seed() const
{
    if (seed_override_) {
        return *seed_override_;
    }
    const std::int64_t s = integer("seed");
    if (s < 0) {
        throw ConfigError("'seed' must be non-negative");
    }
    return static_cast<std::uint64_t>(s);
}

std::string ExperimentConfig::output() const
{
    return string("output", std::string("results"));
}

bool ExperimentConfig::has(const std::string& path) const
{
    return static_cast<bool>(lookup(impl_->table, path));
}

double ExperimentConfig::number(const std::string& path, std::optional<double> fallback) const
{
    const auto v = lookup(impl_->table, path);
    if (!v) {
        if (fallback) {
            return *fallback;
        }
        throw ConfigError("missing number '" + path + "'");
    }
    return as_double(*v.node(), path);
}

std::int64_t ExperimentConfig::integer(const std::string& path, std::optional<std::int64_t> fallback) const
{
    const auto v = lookup(impl_->table, path);
    if (!v) {
        if (fallback) {
            return *fallback;
        }
        throw ConfigError("missing integer '" + path + "'");
    }
    if (const auto* i = v.node()->as_integer()) {
        return i->get();
    }
    throw ConfigError("'" + path + "' must be an integer", line_of(*v.node()));
}

bool ExperimentConfig::boolean(const std::string& path, std::optional<bool> fallback) const
{
    const auto v = lookup(impl_->table, path);
    if (!v) {
        if (fallback) {
            return *fallback;
        }
        throw ConfigError("missing boolean '" + path + "'");
    }
    if (const auto* b = v.node()->as_boolean()) {
        return b->get();
    }
    throw ConfigError("'" + path + "' must be a boolean", line_of(*v.node()));
}

std::string ExperimentConfig::string(const std::string& path, std::optional<std::string> fallback) const
{
    const auto v = lookup(impl_->table, path);
    if (!v) {
        if (fallback) {
            return *fallback;
        }
        throw ConfigError("missing string '" + path + "'");
    }
    if (const auto* s = v.node()->as_string()) {
        return s->get();
    }
    throw ConfigError("'" + path + "' must be a string", line_of(*v.node()));
}

std::vector<double> ExperimentConfig::numbers(const std::string& path,
                                              std::optional<std::vector<double>> fallback) const
{
    const auto v = lookup(impl_->table, path);
    if (!v) {
        if (fallback) {
            return *fallback;
        }
        throw ConfigError("missing array '" + path + "'");
    }
    const auto* arr = v.node()->as_array();
    if (!arr) {
        throw ConfigError("'" + path + "' must be an array of numbers", line_of(*v.node()));
    }
    std::vector<double> out;
    for (const auto& e : *arr) {
        out.push_back(as_double(e, path));
    }
    return out;
}

std::vector<std::array<double, 2>> ExperimentConfig::pairs(const std::string& path) const
{
    const auto v = lookup(impl_->table, path);
    if (!v) {
        throw ConfigError("missing array '" + path + "'");
    }
    const auto* arr = v.node()->as_array();
    if (!arr) {
        throw ConfigError("'" + path + "' must be an array of pairs", line_of(*v.node()));
    }
    std::vector<std::array<double, 2>> out;
    for (const auto& e : *arr) {
        const auto* p = e.as_array();
        if (!p || p->size() != 2) {
            throw ConfigError("'" + path + "' entries must be pairs", line_of(e));
        }
        out.push_back({as_double(*p->get(0), path), as_double(*p->get(1), path)});
    }
    return out;
}

std::vector<std::vector<double>> ExperimentConfig::tuples(const std::string& path, std::size_t n) const
{
    const auto v = lookup(impl_->table, path);
    if (!v) {
        throw ConfigError("missing array '" + path + "'");
    }
    const auto* arr = v.node()->as_array();
    if (!arr) {
        throw ConfigError("'" + path + "' must be an array of arrays", line_of(*v.node()));
    }
    std::vector<std::vector<double>> out;
    for (const auto& e : *arr) {
        const auto* t = e.as_array();
        if (!t || t->size() != n) {
            throw ConfigError("'" + path + "' entries must have " + std::to_string(n) + " numbers", line_of(e));
        }
        std::vector<double> row;
        for (const auto& x : *t) {
            row.push_back(as_double(x, path));
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<std::string> ExperimentConfig::keys(const std::string& path) const
{
    const auto v = lookup(impl_->table, path);
    std::vector<std::string> out;
    if (!v) {
        return out;
    }
    const auto* t = v.node()->as_table();
    if (!t) {
        throw ConfigError("'" + path + "' must be a table", line_of(*v.node()));
    }
    for (const auto& [k, node] : *t) {
        out.emplace_back(k.str());
    }
    std::sort(out.begin(), out.end());
    return out;
}

Criterion ExperimentConfig::criterion(const std::string& section, const std::string& key) const
{
    const std::string path = section + ".criteria." + key;
    const auto v = lookup(impl_->table, path);
    if (!v) {
        throw ConfigError("missing criterion '" + path + "'");
    }
    const auto* s = v.node()->as_string();
    if (!s) {
        throw ConfigError("criterion '" + path + "' must be a string", line_of(*v.node()));
    }
    try {
        return Criterion::parse(s->get());
    } catch (const InvalidArgument& e) {
        throw ConfigError(path + ": " + e.what(), line_of(*v.node()));
    }
}

PolygonalDomain ExperimentConfig::domain(const std::string& section) const
{
    const std::string base = has(section + ".domain") ? section + ".domain" : "domain";
    if (!has(base)) {
        return PolygonalDomain::unit_square();
    }
    if (has(base + ".vertices")) {
        std::vector<Point> pts;
        for (const auto& p : pairs(base + ".vertices")) {
            pts.push_back({p[0], p[1]});
        }
        try {
            return PolygonalDomain(std::move(pts));
        } catch (const InvalidArgument& e) {
            throw ConfigError(base + ".vertices: " + e.what(), line_of(*lookup(impl_->table, base + ".vertices").node()));
        }
    }
    const std::string preset = string(base + ".preset", std::string("unit_square"));
    if (preset == "unit_square") {
        return PolygonalDomain::unit_square();
    }
    if (preset == "l_shape") {
        return PolygonalDomain::l_shape();
    }
    throw ConfigError("unknown domain preset '" + preset + "'", line_of(*lookup(impl_->table, base + ".preset").node()));
}

CoefficientTensor ExperimentConfig::tensor(const std::string& path) const
{
    if (!has(path)) {
        throw ConfigError("missing tensor table '" + path + "'");
    }
    const std::string preset = string(path + ".preset");
    const int m = static_cast<int>(integer(path + ".m", 1));
    const int n = static_cast<int>(integer(path + ".components", 1));
    if (m < 1 || m > 2 || n < 1) {
        throw ConfigError("'" + path + "': need m in {1, 2} and components >= 1",
                          line_of(*lookup(impl_->table, path).node()));
    }
    if (preset == "identity") {
        return identity_tensor(m, n);
    }
    if (preset == "biharmonic") {
        return biharmonic_rho_tensor(number(path + ".rho", 0.0));
    }
    if (preset == "random_constant") {
        const auto seed = static_cast<std::uint64_t>(integer(path + ".seed"));
        std::mt19937_64 rng = make_rng(seed, 0);
        return random_constant_tensor(m, n, number(path + ".scale", 0.3), rng);
    }
    if (preset == "diag_real_tindep") {
        return diag_real_tindep(n);
    }
    throw ConfigError("unknown tensor preset '" + preset + "'", line_of(*lookup(impl_->table, path + ".preset").node()));
}

std::vector<NormParams> ExperimentConfig::lattice(const std::string& section) const
{
    const std::string base = section + ".lattice";
    const std::string kind = string(base + ".kind", std::string("points"));
    std::vector<std::array<double, 2>> pts;  // (s, 1/p)
    if (kind == "points") {
        pts = pairs(base + ".points");
    } else if (kind == "grid") {
        for (const double ip : numbers(base + ".inv_p")) {
            for (const double s : numbers(base + ".s")) {
                pts.push_back({s, ip});
            }
        }
    } else if (kind == "lines") {
        const std::vector<double> c = numbers(base + ".center");
        if (c.size() != 2) {
            throw ConfigError("'" + base + ".center' must be [s, 1/p]");
        }
        const double hw = number(base + ".half_width");
        const int count = static_cast<int>(integer(base + ".count", 5));
        if (count < 2) {
            throw ConfigError("'" + base + ".count' must be >= 2");
        }
        for (const double slope : {1.0, 1.0 / static_cast<double>(kDim - 1)}) {
            for (int k = 0; k < count; ++k) {
                const double t = -hw + 2.0 * hw * k / (count - 1);
                const std::array<double, 2> q{c[0] + t, c[1] + slope * t};
                bool seen = false;
                for (const auto& e : pts) {
                    seen = seen || (std::abs(e[0] - q[0]) < 1e-12 && std::abs(e[1] - q[1]) < 1e-12);
                }
                if (!seen) {
                    pts.push_back(q);
                }
            }
        }
    } else {
        throw ConfigError("unknown lattice kind '" + kind + "'");
    }
    std::vector<NormParams> out;
    for (const auto& [s, ip] : pts) {
        if (!(ip >= 0.0)) {
            throw ConfigError("lattice point with 1/p = " + format_number(ip) + " in '" + base + "'");
        }
        try {
            out.emplace_back(ip == 0.0 ? kInfinity : 1.0 / ip, s);
        } catch (const InvalidArgument& e) {
            throw ConfigError("lattice point (s = " + format_number(s) + ", 1/p = " + format_number(ip) +
                              ") in '" + base + "': " + e.what());
        }
    }
    if (out.empty()) {
        throw ConfigError("empty lattice '" + base + "'");
    }
    return out;
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows)
{
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) {
            return s;
        }
        std::string q = "\"";
        for (const char c : s) {
            q += c;
            if (c == '"') {
                q += '"';
            }
        }
        return q + "\"";
    };
    out << "experiment,case,params,measured,criterion,pass\n";
    for (const auto& r : rows) {
        out << quote(r.experiment) << ',' << quote(r.case_name) << ',' << quote(r.params) << ','
            << format_number(r.measured) << ',' << quote(r.criterion) << ',' << (r.pass ? "true" : "false")
            << '\n';
    }
}

namespace {

nlohmann::ordered_json row_json(const ResultRow& r)
{
    nlohmann::ordered_json j;
    j["experiment"] = r.experiment;
    j["case"] = r.case_name;
    j["params"] = r.params;
    j["measured"] = format_number(r.measured);
    j["criterion"] = r.criterion;
    j["pass"] = r.pass;
    return j;
}

} // namespace

void write_results_json(std::ostream& out, const std::vector<ResultRow>& rows)
{
    nlohmann::ordered_json j;
    j["schema"] = kResultSchemaVersion;
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        j["rows"].push_back(row_json(r));
    }
    out << j.dump(2) << '\n';
}

void write_summary_json(std::ostream& out, const ExperimentConfig& config, const std::vector<ExperimentOutput>& outputs)
{
    nlohmann::ordered_json j;
    j["schema"] = kResultSchemaVersion;
    j["name"] = config.name();
    j["seed"] = config.seed();
    std::size_t total = 0;
    std::size_t passed = 0;
    j["experiments"] = nlohmann::ordered_json::array();
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& o : outputs) {
        std::size_t ok = 0;
        for (const auto& r : o.rows) {
            ok += r.pass ? 1 : 0;
            if (!r.pass) {
                failures.push_back(row_json(r));
            }
        }
        total += o.rows.size();
        passed += ok;
        nlohmann::ordered_json e;
        e["experiment"] = o.experiment;
        e["rows"] = o.rows.size();
        e["passed"] = ok;
        e["runtime_seconds"] = o.runtime;
        j["experiments"].push_back(e);
    }
    j["rows"] = total;
    j["passed"] = passed;
    j["all_passed"] = passed == total;
    j["failures"] = failures;
    out << j.dump(2) << '\n';
}

std::string heat_map_svg(const std::vector<HeatCell>& cells, const std::string& title)
{
    constexpr double kSize = 420.0;
    constexpr double kMargin = 60.0;
    double s0 = 1.0;
    double s1 = 0.0;
    double p0 = 1e300;
    double p1 = -1e300;
    for (const auto& c : cells) {
        s0 = std::min(s0, c.s);
        s1 = std::max(s1, c.s);
        p0 = std::min(p0, c.inv_p);
        p1 = std::max(p1, c.inv_p);
    }
    // Cell size from the smallest nonzero coordinate gap.
    auto gap = [&](bool use_s) {
        double g = 1e300;
        for (const auto& a : cells) {
            for (const auto& b : cells) {
                const double d = std::abs(use_s ? a.s - b.s : a.inv_p - b.inv_p);
                if (d > 1e-12) {
                    g = std::min(g, d);
                }
            }
        }
        return g == 1e300 ? 0.1 : g;
    };
    const double gs = gap(true);
    const double gp = gap(false);
    s0 -= 0.5 * gs;
    s1 += 0.5 * gs;
    p0 -= 0.5 * gp;
    p1 += 0.5 * gp;
    auto x = [&](double s) { return kMargin + (s - s0) / (s1 - s0) * kSize; };
    auto y = [&](double ip) { return kMargin + (p1 - ip) / (p1 - p0) * kSize; };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    std::ostringstream o;
    const double w = kSize + 2 * kMargin;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(w)
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    std::string escaped;
    for (const char ch : title) {
        switch (ch) {
        case '<': escaped += "&lt;"; break;
        case '>': escaped += "&gt;"; break;
        case '&': escaped += "&amp;"; break;
        case '"': escaped += "&quot;"; break;
        default: escaped += ch;
        }
    }
    o << "<text x=\"" << fmt(kMargin) << "\" y=\"24\">" << escaped << "</text>\n";
    for (const auto& c : cells) {
        const double v = std::clamp(c.value, 0.0, 1.0);
        const int r = static_cast<int>(std::lround(255.0 * v));
        const int b = 255 - r;
        const double cx = x(c.s - 0.5 * gs);
        const double cy = y(c.inv_p + 0.5 * gp);
        const double cw = x(c.s + 0.5 * gs) - cx;
        const double ch = y(c.inv_p - 0.5 * gp) - cy;
        o << "<rect x=\"" << fmt(cx) << "\" y=\"" << fmt(cy) << "\" width=\"" << fmt(cw) << "\" height=\"" << fmt(ch)
          << "\" fill=\"rgb(" << r << ",64," << b << ")\" stroke=\"white\"/>\n";
        if (!c.ok) {
            o << "<path d=\"M" << fmt(cx) << ' ' << fmt(cy) << " l" << fmt(cw) << ' ' << fmt(ch) << " M"
              << fmt(cx + cw) << ' ' << fmt(cy) << " l" << fmt(-cw) << ' ' << fmt(ch)
              << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        }
    }
    o << "<text x=\"" << fmt(kMargin + 0.5 * kSize) << "\" y=\"" << fmt(w - 20) << "\" text-anchor=\"middle\">s</text>\n";
    o << "<text x=\"20\" y=\"" << fmt(kMargin + 0.5 * kSize) << "\" text-anchor=\"middle\">1/p</text>\n";
    o << "<text x=\"" << fmt(kMargin) << "\" y=\"" << fmt(w - 40) << "\">" << fmt(s0 + 0.5 * gs) << "</text>\n";
    o << "<text x=\"" << fmt(kMargin + kSize) << "\" y=\"" << fmt(w - 40) << "\" text-anchor=\"end\">"
      << fmt(s1 - 0.5 * gs) << "</text>\n";
    o << "<text x=\"" << fmt(kMargin - 6) << "\" y=\"" << fmt(kMargin + kSize) << "\" text-anchor=\"end\">"
      << fmt(p0 + 0.5 * gp) << "</text>\n";
    o << "<text x=\"" << fmt(kMargin - 6) << "\" y=\"" << fmt(kMargin + 12) << "\" text-anchor=\"end\">"
      << fmt(p1 - 0.5 * gp) << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

} // namespace ellab
