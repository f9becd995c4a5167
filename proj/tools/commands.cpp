#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <vector>

#include "bubblelab/bubble_detector.hpp"
#include "bubblelab/errors.hpp"
#include "bubblelab/field_model.hpp"
#include "bubblelab/format.hpp"
#include "bubblelab/green_ball.hpp"
#include "bubblelab/io.hpp"
#include "bubblelab/quantizer.hpp"
#include "bubblelab/radial_engine.hpp"
#include "json.hpp"

namespace bubblelab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_config(const std::string& text, const std::set<std::string>& allowed) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("config: unknown key '" + it.key() + "'");
    return j;
}

double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ConfigError("config." + key + ": expected a number");
    return j.at(key).get<double>();
}

int int_or(const json& j, const std::string& key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw ConfigError("config." + key + ": expected an integer");
    return j.at(key).get<int>();
}

// Output writing is serialized: commands compute everything, then write in a fixed order.
class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

    void flush(const std::string& status) {
        fs::create_directories(dir_);
        for (const auto& [name, content] : files_) write(name, content);
        write("status.txt", status + "\n");
        files_.clear();
    }

private:
    void write(const std::string& name, const std::string& content) const {
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
        os << content;
    }

    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

// Runs fn(i) for i < n on up to `threads` workers. The first failure by index is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned m = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < m; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

FamilySpec family_section(const json& j, const Overrides& o) {
    if (!j.contains("family")) throw ConfigError("config: missing 'family'");
    FamilySpec spec = io::family_from_json(j.at("family").dump());
    if (o.k_max) {
        std::erase_if(spec.k_values, [&](int k) { return k > *o.k_max; });
    }
    if (spec.k_values.empty()) throw ConfigError("config.family: no k values left to run");
    return spec;
}

void apply_seed(MassOptions& m, const Overrides& o) {
    if (o.seed) m.shells.seed = *o.seed;
}

void apply_seed(DetectorConfig& d, const Overrides& o) {
    if (o.seed) d.seed = *o.seed;
    apply_seed(d.mass, o);
}

std::string label(const FamilySpec& spec) { return spec.type; }

std::string plot_script(const std::string& data, const std::string& ylabel, const std::vector<std::string>& columns,
                        bool logy) {
    std::ostringstream os;
    os << "set xlabel 'k'\nset ylabel '" << ylabel << "'\n";
    if (logy) os << "set logscale y\n";
    os << "plot ";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) os << ", \\\n     ";
        os << "'" << data << "' using 1:" << i + 2 << " with linespoints title '" << columns[i] << "'";
    }
    os << "\n";
    return os.str();
}

}  // namespace

unsigned thread_cap(const char* env) {
    if (!env || !*env) return std::max(1u, std::thread::hardware_concurrency());
    const std::string s(env);
    if (s.find_first_not_of("0123456789") != std::string::npos) throw ConfigError("BUBBLELAB_THREADS must be a positive integer");
    const unsigned long v = std::stoul(s);
    if (v == 0 || v > 4096) throw ConfigError("BUBBLELAB_THREADS must be in [1, 4096]");
    return static_cast<unsigned>(v);
}

void cmd_solve_radial(const std::string& text, const Overrides& o) {
    const auto j = parse_config(text, {"beta", "r_max", "tol"});
    if (!j.contains("beta")) throw ConfigError("config: missing 'beta'");
    const double beta = number_or(j, "beta", 0.0);
    const double r_max = number_or(j, "r_max", 1e4);
    const double tol = number_or(j, "tol", 1e-10);
    if (!(beta > 0.0) || !(r_max > 0.0) || !(tol > 0.0)) throw ConfigError("config: beta, r_max and tol must be positive");
    const auto sol = shoot(beta, r_max, tol);
    Output out(o.out);
    out.add("profile.csv", to_csv(sol));
    out.add("summary.json", io::radial_summary_json(sol) + "\n");
    out.flush("ok");
}

void cmd_sweep_beta(const std::string& text, const Overrides& o) {
    const auto j = parse_config(text, {"beta_min", "beta_max", "steps", "r_max", "tol"});
    const double lo = number_or(j, "beta_min", 0.5);
    const double hi = number_or(j, "beta_max", 2.0);
    const int steps = int_or(j, "steps", 16);
    const double r_max = number_or(j, "r_max", 1e4);
    const double tol = number_or(j, "tol", 1e-10);
    if (steps < 2) throw ConfigError("config.steps: need at least 2");
    if (!(lo > 0.0 && hi > lo)) throw ConfigError("config: need 0 < beta_min < beta_max");
    if (!(r_max > 0.0 && tol > 0.0)) throw ConfigError("config: r_max and tol must be positive");

    struct Row {
        double beta;
        std::string cls, status = "ok";
        double energy = std::nan(""), min_lap = std::nan("");
    };
    std::vector<Row> rows(static_cast<std::size_t>(steps));
    parallel_for(rows.size(), o.threads, [&](std::size_t i) {
        Row& r = rows[i];
        r.beta = lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
        try {
            const auto sol = shoot(r.beta, r_max, tol);
            r.cls = std::string(to_string(sol.classification()));
            if (sol.classification() == Classification::EntireIntegrable)
                r.energy = energy_total(sol).value;
            else if (sol.classification() == Classification::FiniteRadiusBlowup)
                r.energy = std::numeric_limits<double>::infinity();
            else
                r.energy = energy_radial(sol, sol.r_max()).value;
            r.min_lap = laplacian_min(sol);
        } catch (const std::exception&) {
            r.status = "error";
        }
    });
    std::ostringstream os;
    os << "beta,classification,energy,min_lap,status\n";
    for (const auto& r : rows)
        os << format_double(r.beta) << ',' << r.cls << ',' << format_double(r.energy) << ','
           << format_double(r.min_lap) << ',' << r.status << '\n';
    Output out(o.out);
    out.add("sweep.csv", os.str());
    out.flush("ok");
}

void cmd_family(const std::string& text, const Overrides& o) {
    const auto j = parse_config(text, {"family", "regions", "mass"});
    const auto spec = family_section(j, o);
    std::vector<Region> regions;
    if (j.contains("regions")) {
        if (!j.at("regions").is_array()) throw ConfigError("config.regions: expected an array");
        for (const auto& r : j.at("regions")) regions.push_back(io::region_from_json(r.dump()));
    } else {
        regions.push_back(Ball{Point4{}, std::min(1.0, spec.domain_radius)});
    }
    MassOptions mo = j.contains("mass") ? io::mass_options_from_json(j.at("mass").dump()) : MassOptions{};
    apply_seed(mo, o);

    const auto fam = build_family(spec);
    std::vector<std::vector<MassEstimate>> masses(fam.size(), std::vector<MassEstimate>(regions.size()));
    parallel_for(fam.size() * regions.size(), o.threads, [&](std::size_t i) {
        const std::size_t k = i / regions.size(), r = i % regions.size();
        masses[k][r] = mass(fam[k], regions[r], nullptr, mo);
    });

    std::vector<io::MassRow> rows;
    std::ostringstream dat;
    dat << "# k";
    for (std::size_t r = 0; r < regions.size(); ++r) dat << " mass_" << r;
    dat << "\n";
    std::vector<std::string> cols;
    for (std::size_t r = 0; r < regions.size(); ++r) cols.push_back(describe(regions[r]));
    for (std::size_t k = 0; k < fam.size(); ++k) {
        dat << spec.k_values[k];
        for (std::size_t r = 0; r < regions.size(); ++r) {
            rows.push_back({label(spec), spec.k_values[k], describe(regions[r]), masses[k][r].value,
                            masses[k][r].abs_error});
            dat << ' ' << format_double(masses[k][r].value);
        }
        dat << '\n';
    }
    Output out(o.out);
    out.add("family.json", io::to_json(spec) + "\n");
    out.add("masses.csv", io::masses_csv(rows));
    out.add("mass_vs_k.dat", dat.str());
    out.add("mass_vs_k.gp", plot_script("mass_vs_k.dat", "mass", cols, false));
    out.flush("ok");
}

void cmd_detect(const std::string& text, const Overrides& o) {
    const auto j = parse_config(text, {"family", "detector"});
    const auto spec = family_section(j, o);
    DetectorConfig cfg = j.contains("detector") ? io::detector_config_from_json(j.at("detector").dump()) : DetectorConfig{};
    apply_seed(cfg, o);

    const auto fam = build_family(spec);
    std::vector<DetectionReport> reports(fam.size());
    std::vector<std::string> failures(fam.size());
    parallel_for(fam.size(), o.threads, [&](std::size_t i) {
        try {
            reports[i] = find_peaks(fam[i], cfg);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });

    json all = json::array();
    std::ostringstream dat;
    dat << "# k points max_residual min_local_mass\n";
    bool ok = true;
    for (std::size_t i = 0; i < fam.size(); ++i) {
        if (!failures[i].empty()) {
            ok = false;
            all.push_back({{"k", spec.k_values[i]}, {"status", "error"}, {"message", failures[i]}});
            continue;
        }
        json r = json::parse(io::to_json(reports[i]));
        r["k"] = spec.k_values[i];
        r["status"] = "ok";
        all.push_back(r);
        double res = 0.0, m = std::numeric_limits<double>::infinity();
        for (const auto& p : reports[i].points) {
            res = std::max(res, p.bubble_residual);
            m = std::min(m, p.local_mass.value);
        }
        dat << spec.k_values[i] << ' ' << reports[i].points.size() << ' ' << format_double(res) << ' '
            << format_double(m) << '\n';
    }
    Output out(o.out);
    out.add("detection.json", all.dump(2) + "\n");
    if (failures.back().empty()) out.add("points.csv", points_csv(reports.back().points));
    out.add("residual_vs_k.dat", dat.str());
    out.add("residual_vs_k.gp", plot_script("residual_vs_k.dat", "bubble residual / local mass",
                                            {"points", "max residual", "min local mass"}, false));
    out.flush(ok ? "ok" : "partial: some members failed");
    if (!ok) throw NumericalError("detection failed for some family members");
}

void cmd_quantize(const std::string& text, const Overrides& o) {
    const auto j = parse_config(text, {"family", "quantize", "omega0"});
    const auto spec = family_section(j, o);
    QuantizeConfig cfg = j.contains("quantize") ? io::quantize_config_from_json(j.at("quantize").dump()) : QuantizeConfig{};
    apply_seed(cfg.detector, o);
    apply_seed(cfg.mass, o);
    const Region omega0 = j.contains("omega0") ? io::region_from_json(j.at("omega0").dump())
                                               : Region{Annulus{Point4{}, 1.0, 2.0}};

    const auto fam = build_family(spec);
    const auto rep = quantize(fam, omega0, cfg);

    std::ostringstream verdict;
    verdict << "regime=" << to_string(rep.regime) << "\n";
    verdict << "total=" << rep.total_verdict() << "\n";
    for (std::size_t i = 0; i < rep.verdict.size(); ++i)
        verdict << "cluster" << i << " n=" << rep.verdict[i] << " deviation=" << format_double(rep.deviation[i])
                << "\n";
    std::ostringstream dat;
    dat << "# k lap_l1_omega0 lap_negpart_l1\n";
    for (std::size_t i = 0; i < rep.k_values.size(); ++i)
        dat << rep.k_values[i] << ' ' << format_double(rep.lap_l1_omega0[i]) << ' '
            << format_double(rep.lap_negpart_l1[i]) << '\n';

    Output out(o.out);
    out.add("quantization.json", io::to_json(rep) + "\n");
    out.add("summary.csv", summary_csv(rep));
    out.add("verdict.txt", verdict.str());
    out.add("lap_vs_k.dat", dat.str());
    out.add("lap_vs_k.gp", plot_script("lap_vs_k.dat", "L1 of Laplacian", {"omega0", "negative part"}, true));
    out.flush("ok");
}

void cmd_green_check(const std::string& text, const Overrides& o) {
    const auto j = parse_config(text, {"ball", "log_probes", "pairs", "kernel_probes", "seed"});
    Ball b{Point4{}, 1.0};
    if (j.contains("ball")) b = std::get<Ball>(io::region_from_json(json{{"ball", j.at("ball")}}.dump()));
    const BallSpec ball(b);
    const int log_probes = int_or(j, "log_probes", 12);
    const int pairs = int_or(j, "pairs", 100);
    if (log_probes < 2 || pairs < 1) throw ConfigError("config: need log_probes >= 2 and pairs >= 1");
    std::uint64_t seed = 0x5eed5eedULL;
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("config.seed: expected a non-negative integer");
        seed = j.at("seed").get<std::uint64_t>();
    }
    if (o.seed) seed = *o.seed;
    std::vector<KernelProbe> probes;
    if (j.contains("kernel_probes")) {
        if (!j.at("kernel_probes").is_array()) throw ConfigError("config.kernel_probes: expected an array");
        for (const auto& p : j.at("kernel_probes")) {
            if (!p.is_object()) throw ConfigError("config.kernel_probes: expected objects");
            for (auto it = p.begin(); it != p.end(); ++it)
                if (it.key() != "r_x" && it.key() != "r_y" && it.key() != "angle")
                    throw ConfigError("config.kernel_probes: unknown key '" + it.key() + "'");
            probes.push_back({number_or(p, "r_x", 0.0), number_or(p, "r_y", 0.0), number_or(p, "angle", 0.0)});
        }
    } else {
        for (double rx : {0.0, 0.3, 0.6})
            for (double ry : {0.1, 0.5, 0.9}) probes.push_back({rx * b.radius, ry * b.radius, 1.0});
    }

    // Dirichlet kernel sanity on random interior pairs.
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto sample = [&] {
        Point4 d(g(rng), g(rng), g(rng), g(rng));
        d *= 1.0 / d.norm();
        return b.center + (0.95 * b.radius * std::pow(unit(rng), 0.25)) * d;
    };
    double asym = 0.0, min_g = std::numeric_limits<double>::infinity();
    for (int i = 0; i < pairs; ++i) {
        const Point4 x = sample(), y = sample();
        const double gxy = green_dirichlet(x, y, ball), gyx = green_dirichlet(y, x, ball);
        asym = std::max(asym, std::abs(gxy - gyx) / std::max(std::abs(gxy), 1e-300));
        min_g = std::min(min_g, gxy);
    }

    const auto lb = navier_log_bound(ball, log_probes);
    std::ostringstream csv;
    csv << "s,deviation\n";
    for (std::size_t i = 0; i < lb.radii.size(); ++i)
        csv << format_double(lb.radii[i]) << ',' << format_double(lb.deviation[i]) << '\n';
    json summary = {{"ball", {{"center", {b.center[0], b.center[1], b.center[2], b.center[3]}}, {"radius", b.radius}}},
                    {"log_bound_sup", lb.sup},
                    {"log_bound_inf", lb.inf},
                    {"log_bound_spread", lb.sup - lb.inf},
                    {"dirichlet_pairs", pairs},
                    {"dirichlet_max_asymmetry", asym},
                    {"dirichlet_min", min_g},
                    {"seed", seed}};
    Output out(o.out);
    out.add("log_bound.csv", csv.str());
    out.add("kernel_table.csv", kernel_table_csv(ball, probes));
    out.add("green.json", summary.dump(2) + "\n");
    out.flush("ok");
}

}  // namespace bubblelab::cli
