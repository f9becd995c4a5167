#include "bubblelab/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "bubblelab/errors.hpp"
#include "bubblelab/format.hpp"
#include "json.hpp"

namespace bubblelab::io {

using nlohmann::json;

namespace {

json parse(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
}

// Reads fields of one object and rejects whatever was not consumed.
class Reader {
public:
    Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }
    const json& at(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void get(const std::string& key, double& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(where_ + "." + key + ": expected a number");
        out = v.get<double>();
    }
    void get(const std::string& key, int& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) throw ConfigError(where_ + "." + key + ": expected an integer");
        out = v.get<int>();
    }
    void get(const std::string& key, bool& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(where_ + "." + key + ": expected a boolean");
        out = v.get<bool>();
    }
    void get(const std::string& key, std::string& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(where_ + "." + key + ": expected a string");
        out = v.get<std::string>();
    }
    void get(const std::string& key, std::uint64_t& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_number_unsigned()) throw ConfigError(where_ + "." + key + ": expected a non-negative integer");
        out = v.get<std::uint64_t>();
    }
    void get(const std::string& key, std::optional<double>& out) {
        if (!has(key)) return;
        double v = 0.0;
        get(key, v);
        out = v;
    }

    std::string path(const std::string& key) const { return where_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(where_ + ": unknown key '" + it.key() + "'");
    }

private:
    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

json point_json(const Point4& p) { return json::array({p[0], p[1], p[2], p[3]}); }

Point4 point_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) throw ConfigError(where + ": expected an array of 4 numbers");
    Point4 p;
    for (std::size_t i = 0; i < 4; ++i) {
        if (!j[i].is_number()) throw ConfigError(where + ": expected an array of 4 numbers");
        p[i] = j[i].get<double>();
    }
    return p;
}

json ball_json(const Ball& b) { return {{"center", point_json(b.center)}, {"radius", b.radius}}; }

Ball ball_from(const json& j, const std::string& where) {
    Reader r(j, where);
    Ball b;
    if (r.has("center")) b.center = point_from(r.at("center"), r.path("center"));
    r.get("radius", b.radius);
    r.finish();
    if (!(b.radius > 0.0)) throw ConfigError(where + ": radius must be positive");
    return b;
}

json shells_json(const quad::ShellOptions& s) {
    return {{"panels_per_decade", s.panels_per_decade}, {"strata", s.strata},
            {"product_rule", s.product_rule},           {"product_n", s.product_n},
            {"seed", s.seed},                           {"inner_fraction", s.inner_fraction}};
}

quad::ShellOptions shells_from(const json& j, const std::string& where) {
    Reader r(j, where);
    quad::ShellOptions s;
    r.get("panels_per_decade", s.panels_per_decade);
    r.get("strata", s.strata);
    r.get("product_rule", s.product_rule);
    r.get("product_n", s.product_n);
    r.get("seed", s.seed);
    r.get("inner_fraction", s.inner_fraction);
    r.finish();
    return s;
}

json mass_json(const MassOptions& m) {
    return {{"shells", shells_json(m.shells)}, {"compact_partition", m.compact_partition}};
}

MassOptions mass_from(const json& j, const std::string& where) {
    Reader r(j, where);
    MassOptions m;
    if (r.has("shells")) m.shells = shells_from(r.at("shells"), r.path("shells"));
    r.get("compact_partition", m.compact_partition);
    r.finish();
    return m;
}

json estimate_json(const MassEstimate& m) {
    return {{"value", number(m.value)}, {"abs_error", number(m.abs_error)}, {"method", m.method},
            {"samples", m.samples}};
}

json family_json(const FamilySpec& s) {
    json j = {{"type", s.type}, {"domain_radius", s.domain_radius}, {"k_values", s.k_values}};
    if (s.type == "fk" || s.type == "multibubble") {
        j["mu0"] = s.mu0;
        j["ratio"] = s.ratio;
    }
    if (s.type == "gk" || s.type == "radial") {
        if (s.beta) j["beta"] = *s.beta;
        if (s.alpha) j["alpha"] = *s.alpha;
        j["r_max"] = s.r_max;
    }
    if (s.type == "multibubble") {
        json c = json::array();
        for (const auto& p : s.centers) c.push_back(point_json(p));
        j["centers"] = c;
        j["scales"] = s.scales;
        j["laplacian"] = s.laplacian == LaplacianMode::Analytic ? "analytic" : "finite-difference";
    }
    return j;
}

FamilySpec family_from(const json& j, const std::string& where) {
    Reader r(j, where);
    FamilySpec s;
    r.get("type", s.type);
    if (s.type != "fk" && s.type != "gk" && s.type != "multibubble" && s.type != "radial")
        throw ConfigError(where + ".type: unknown family type '" + s.type + "'");
    r.get("domain_radius", s.domain_radius);
    if (r.has("k_values")) {
        const auto& k = r.at("k_values");
        if (!k.is_array()) throw ConfigError(r.path("k_values") + ": expected an array");
        for (const auto& v : k) {
            if (!v.is_number_integer()) throw ConfigError(r.path("k_values") + ": expected integers");
            s.k_values.push_back(v.get<int>());
        }
    }
    r.get("mu0", s.mu0);
    r.get("ratio", s.ratio);
    r.get("beta", s.beta);
    r.get("alpha", s.alpha);
    r.get("r_max", s.r_max);
    if (r.has("centers")) {
        const auto& c = r.at("centers");
        if (!c.is_array()) throw ConfigError(r.path("centers") + ": expected an array");
        for (const auto& p : c) s.centers.push_back(point_from(p, r.path("centers")));
    }
    if (r.has("scales")) {
        const auto& c = r.at("scales");
        if (!c.is_array()) throw ConfigError(r.path("scales") + ": expected an array");
        for (const auto& v : c) {
            if (!v.is_number()) throw ConfigError(r.path("scales") + ": expected numbers");
            s.scales.push_back(v.get<double>());
        }
    }
    std::string lap = s.laplacian == LaplacianMode::Analytic ? "analytic" : "finite-difference";
    r.get("laplacian", lap);
    if (lap == "analytic")
        s.laplacian = LaplacianMode::Analytic;
    else if (lap == "finite-difference")
        s.laplacian = LaplacianMode::FiniteDifference;
    else
        throw ConfigError(r.path("laplacian") + ": expected analytic or finite-difference");
    r.finish();
    if (!(s.domain_radius > 0.0)) throw ConfigError(where + ".domain_radius: must be positive");
    if (s.centers.size() != s.scales.size()) throw ConfigError(where + ": centers and scales differ in length");
    return s;
}

json detector_json(const DetectorConfig& c) {
    json j = {{"weighted_sup_threshold", c.weighted_sup_threshold},
              {"lap_threshold", c.lap_threshold},
              {"max_points", c.max_points},
              {"refinement_levels", c.refinement_levels},
              {"fit_radius", c.fit_radius},
              {"domain_shrink", c.domain_shrink},
              {"grid_per_axis", c.grid_per_axis},
              {"multistart", c.multistart},
              {"soundness_probes", c.soundness_probes},
              {"seed", c.seed},
              {"mass", mass_json(c.mass)}};
    if (c.domain) j["domain"] = ball_json(*c.domain);
    return j;
}

DetectorConfig detector_from(const json& j, const std::string& where) {
    Reader r(j, where);
    DetectorConfig c;
    r.get("weighted_sup_threshold", c.weighted_sup_threshold);
    r.get("lap_threshold", c.lap_threshold);
    r.get("max_points", c.max_points);
    r.get("refinement_levels", c.refinement_levels);
    r.get("fit_radius", c.fit_radius);
    if (r.has("domain")) c.domain = ball_from(r.at("domain"), r.path("domain"));
    r.get("domain_shrink", c.domain_shrink);
    r.get("grid_per_axis", c.grid_per_axis);
    r.get("multistart", c.multistart);
    r.get("soundness_probes", c.soundness_probes);
    r.get("seed", c.seed);
    if (r.has("mass")) c.mass = mass_from(r.at("mass"), r.path("mass"));
    r.finish();
    c.validate();
    return c;
}

json quantize_json(const QuantizeConfig& c) {
    json j = {{"detector", detector_json(c.detector)},
              {"ratio_threshold", c.ratio_threshold},
              {"rtilde", c.rtilde},
              {"warn_deviation", c.warn_deviation},
              {"mass", mass_json(c.mass)}};
    if (c.cluster_radius) j["cluster_radius"] = *c.cluster_radius;
    if (c.probe_ball) j["probe_ball"] = ball_json(*c.probe_ball);
    return j;
}

QuantizeConfig quantize_from(const json& j, const std::string& where) {
    Reader r(j, where);
    QuantizeConfig c;
    if (r.has("detector")) c.detector = detector_from(r.at("detector"), r.path("detector"));
    r.get("ratio_threshold", c.ratio_threshold);
    r.get("cluster_radius", c.cluster_radius);
    r.get("rtilde", c.rtilde);
    r.get("warn_deviation", c.warn_deviation);
    if (r.has("probe_ball")) c.probe_ball = ball_from(r.at("probe_ball"), r.path("probe_ball"));
    if (r.has("mass")) c.mass = mass_from(r.at("mass"), r.path("mass"));
    r.finish();
    if (!(c.ratio_threshold > 1.0)) throw ConfigError(where + ".ratio_threshold: must exceed 1");
    if (!(c.rtilde > 0.0)) throw ConfigError(where + ".rtilde: must be positive");
    return c;
}

json region_json(const Region& region) {
    return std::visit(
        [](const auto& g) -> json {
            using T = std::decay_t<decltype(g)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return {{"ball", ball_json(g)}};
            } else if constexpr (std::is_same_v<T, Annulus>) {
                return {{"annulus", {{"center", point_json(g.center)}, {"r_in", g.r_in}, {"r_out", g.r_out}}}};
            } else {
                json holes = json::array();
                for (const auto& h : g.holes) holes.push_back(ball_json(h));
                return {{"ball_minus_balls", {{"outer", ball_json(g.outer)}, {"holes", holes}}}};
            }
        },
        region);
}

Region region_from(const json& j, const std::string& where) {
    if (!j.is_object() || j.size() != 1) throw ConfigError(where + ": expected exactly one region kind");
    const auto& [kind, body] = *j.items().begin();
    const std::string w = where + "." + kind;
    Region out;
    if (kind == "ball") {
        out = ball_from(body, w);
    } else if (kind == "annulus") {
        Reader r(body, w);
        Annulus a;
        if (r.has("center")) a.center = point_from(r.at("center"), r.path("center"));
        r.get("r_in", a.r_in);
        r.get("r_out", a.r_out);
        r.finish();
        out = a;
    } else if (kind == "ball_minus_balls") {
        Reader r(body, w);
        BallMinusBalls b;
        b.outer = ball_from(r.at("outer"), r.path("outer"));
        if (r.has("holes")) {
            const auto& h = r.at("holes");
            if (!h.is_array()) throw ConfigError(r.path("holes") + ": expected an array");
            for (const auto& x : h) b.holes.push_back(ball_from(x, r.path("holes")));
        }
        r.finish();
        out = b;
    } else {
        throw ConfigError(where + ": unknown region kind '" + kind + "'");
    }
    try {
        validate(out);
    } catch (const GeometryError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return out;
}

json point_report(const ConcentrationPoint& p) {
    return {{"location", point_json(p.location)},  {"mu", number(p.mu)},
            {"peak_value", number(p.peak_value)},  {"bubble_residual", number(p.bubble_residual)},
            {"local_mass", estimate_json(p.local_mass)}, {"mass_radius", number(p.mass_radius)}};
}

json detection_json(const DetectionReport& r) {
    json pts = json::array();
    for (const auto& p : r.points) pts.push_back(point_report(p));
    return {{"points", pts},
            {"sup_weighted_u", number(r.sup_weighted_u)},
            {"sup_weighted_lap", number(r.sup_weighted_lap)},
            {"min_separation_ratio", number(r.min_separation_ratio)},
            {"complete", r.complete},
            {"merged", r.merged},
            {"search_domain", ball_json(r.search_domain)}};
}

json trend_json(const TrendTest& t) { return {{"bounded", t.bounded}, {"divergent", t.divergent}}; }

json numbers(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

}  // namespace

std::string to_json(const FamilySpec& spec) { return family_json(spec).dump(2); }
FamilySpec family_from_json(std::string_view text) { return family_from(parse(text), "family"); }

std::string to_json(const MassOptions& opts) { return mass_json(opts).dump(2); }
MassOptions mass_options_from_json(std::string_view text) { return mass_from(parse(text), "mass"); }

std::string to_json(const DetectorConfig& cfg) { return detector_json(cfg).dump(2); }
DetectorConfig detector_config_from_json(std::string_view text) { return detector_from(parse(text), "detector"); }

std::string to_json(const QuantizeConfig& cfg) { return quantize_json(cfg).dump(2); }
QuantizeConfig quantize_config_from_json(std::string_view text) { return quantize_from(parse(text), "quantize"); }

std::string to_json(const Region& region) { return region_json(region).dump(2); }
Region region_from_json(std::string_view text) { return region_from(parse(text), "region"); }

std::string radial_summary_json(const RadialSolution& sol) {
    json j = {{"beta", sol.beta()},
              {"classification", std::string(to_string(sol.classification()))},
              {"r_max", sol.r_max()},
              {"min_lap", number(laplacian_min(sol))}};
    if (sol.classification() == Classification::EntireIntegrable) {
        const auto e = energy_total(sol);
        j["energy"] = number(e.value);
        j["energy_error"] = number(e.abs_error);
    } else if (sol.classification() == Classification::FiniteRadiusBlowup) {
        // Infinite energy; JSON has no infinity, so mark it explicitly.
        j["energy"] = "inf";
        j["energy_error"] = nullptr;
    } else {
        const auto e = energy_radial(sol, sol.r_max());
        j["energy"] = number(e.value);
        j["energy_error"] = number(e.abs_error);
    }
    j["blowup_radius"] = sol.blowup_radius() ? json(*sol.blowup_radius()) : json(nullptr);
    return j.dump(2);
}

std::string to_json(const DetectionReport& report) { return detection_json(report).dump(2); }

std::string to_json(const QuantizationReport& r) {
    json clusters = json::array();
    for (const auto& c : r.clusters) {
        json scales = numbers(c.tree.scales);
        json groups = c.tree.groups;
        json level_masses = json::array();
        for (const auto& m : c.level_masses) level_masses.push_back(estimate_json(m));
        json necks = json::array();
        for (std::size_t i = 0; i < c.necks.size(); ++i) {
            const auto& s = c.necks[i];
            necks.push_back({{"level", s.level},
                             {"nu", s.nu},
                             {"R", s.R},
                             {"r", s.r_scale},
                             {"rho", s.rho_inner},
                             {"energy", estimate_json(c.neck_energies[i])}});
        }
        clusters.push_back({{"members", c.members},
                            {"root", point_json(c.tree.root())},
                            {"root_member", c.members[c.tree.root_index]},
                            {"scales", scales},
                            {"groups", groups},
                            {"level_radii", numbers(c.level_radii)},
                            {"level_masses", level_masses},
                            {"level_expected", c.level_expected},
                            {"mass", estimate_json(c.mass)},
                            {"n", c.n},
                            {"deviation", number(c.deviation)},
                            {"warning", c.warning},
                            {"necks", necks}});
    }
    json j = {{"k_values", r.k_values},
              {"detection", detection_json(r.detection)},
              {"clusters", clusters},
              {"verdict", r.verdict},
              {"total_verdict", r.total_verdict()},
              {"lap_l1_omega0", numbers(r.lap_l1_omega0)},
              {"lap_negpart_l1", numbers(r.lap_negpart_l1)},
              {"lap_trend", trend_json(r.lap_trend)},
              {"negpart_trend", trend_json(r.negpart_trend)},
              {"regime", to_string(r.regime)},
              {"warnings", r.warnings}};
    j["probe_mass"] = r.probe_mass ? estimate_json(*r.probe_mass) : json(nullptr);
    return j.dump(2);
}

std::string masses_csv(const std::vector<MassRow>& rows) {
    std::ostringstream os;
    os << "family,k,region,value,abs_error\n";
    for (const auto& m : rows) {
        if (m.family.find(',') != std::string::npos || m.region.find(',') != std::string::npos)
            throw ConfigError("masses_csv: labels must not contain commas");
        os << m.family << ',' << m.k << ',' << m.region << ',' << format_double(m.value) << ','
           << format_double(m.abs_error) << '\n';
    }
    return os.str();
}

double parse_double(std::string_view s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw ConfigError("csv: no column '" + std::string(name) + "'");
}

double CsvTable::number(std::size_t row, std::string_view name) const {
    return parse_double(rows.at(row).at(column(name)));
}

CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    auto split = [](std::string_view line) {
        std::vector<std::string> out;
        std::size_t start = 0;
        for (;;) {
            const auto p = line.find(',', start);
            out.emplace_back(line.substr(start, p - start));
            if (p == std::string_view::npos) break;
            start = p + 1;
        }
        return out;
    };
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        pos = end + 1;
        if (line.empty()) continue;
        if (first) {
            t.header = split(line);
            first = false;
        } else {
            auto row = split(line);
            if (row.size() != t.header.size()) throw ConfigError("csv: ragged row");
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

}  // namespace bubblelab::io
