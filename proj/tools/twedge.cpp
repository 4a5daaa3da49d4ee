// twedge command-line front end: deterministic Marchenko-Pastur edge
// quantities, elliptical covariance simulation, and the Monte-Carlo
// experiment drivers. See README.md for the output schemas.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "twedge/twedge.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace twedge;

namespace {

struct ModelOptions {
    std::string builtin;
    std::string spectrum_file;
    std::string model_file;
    std::string radius = "chi";
    int M = 0;
    int N = 0;
    double phi = 0.0;
    bool has_M = false, has_N = false, has_phi = false, has_radius = false, has_builtin = false,
         has_spectrum_file = false;
};

struct CommonOptions {
    std::uint64_t seed = 0;
    int reps = 0;
    int workers = 1;
    std::string out_dir;
    std::string profile = "desk";
    bool json_out = false;
};

void add_model_flags(CLI::App* cmd, ModelOptions& m) {
    cmd->add_option("--builtin", m.builtin, "builtin spectrum: identity|sigma1|sigma2");
    cmd->add_option("--spectrum-file", m.spectrum_file, "spectrum file: 'value weight' lines");
    cmd->add_option("--model", m.model_file, "model config file (flat key = value)");
    cmd->add_option("--radius", m.radius, "radius law: chi|pearson2|gammaexp|d1|d2");
    cmd->add_option("--M", m.M, "dimension M");
    cmd->add_option("--N", m.N, "sample size N");
    cmd->add_option("--phi", m.phi, "aspect ratio phi (edge command, or consistency check)");
}

std::size_t opt_count(const CLI::App* cmd, const std::string& name) {
    const CLI::Option* opt = cmd->get_option_no_throw(name);
    return opt ? opt->count() : 0;
}

void capture_model_presence(CLI::App* cmd, ModelOptions& m) {
    m.has_M = opt_count(cmd, "--M") > 0;
    m.has_N = opt_count(cmd, "--N") > 0;
    m.has_phi = opt_count(cmd, "--phi") > 0;
    m.has_radius = opt_count(cmd, "--radius") > 0;
    m.has_builtin = opt_count(cmd, "--builtin") > 0;
    m.has_spectrum_file = opt_count(cmd, "--spectrum-file") > 0;
}

// Flat key = value model file; explicit flags win over file values.
void apply_model_file(ModelOptions& m, std::uint64_t& seed, bool& has_seed) {
    if (m.model_file.empty()) return;
    std::ifstream in(m.model_file);
    require(in.good(), "IoError", "cannot open model file " + m.model_file);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            require(line.find_first_not_of(" \t\r") == std::string::npos, "IoError",
                    "model file line " + std::to_string(lineno) + " is not 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            auto end = s.find_last_not_of(" \t\r");
            s.erase(end == std::string::npos ? 0 : end + 1);
            return s;
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "spectrum") {
            if (!m.has_builtin && !m.has_spectrum_file) {
                if (value == "identity" || value == "sigma1" || value == "sigma2")
                    m.builtin = value;
                else
                    m.spectrum_file = value;
            }
        } else if (key == "phi") {
            if (!m.has_phi) { m.phi = std::stod(value); m.has_phi = true; }
        } else if (key == "M") {
            if (!m.has_M) { m.M = std::stoi(value); m.has_M = true; }
        } else if (key == "N") {
            if (!m.has_N) { m.N = std::stoi(value); m.has_N = true; }
        } else if (key == "radius") {
            if (!m.has_radius) { m.radius = value; m.has_radius = true; }
        } else if (key == "seed") {
            if (!has_seed) { seed = std::stoull(value); has_seed = true; }
        } else {
            fail("IoError", "model file line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
}

PopulationSpectrum resolve_spectrum(const ModelOptions& m, double phi) {
    require(!(m.has_builtin || !m.builtin.empty()) || !(m.has_spectrum_file || !m.spectrum_file.empty()) ||
                m.builtin.empty() || m.spectrum_file.empty(),
            "UsageError", "--builtin and --spectrum-file are mutually exclusive");
    if (!m.spectrum_file.empty()) {
        std::ifstream in(m.spectrum_file);
        require(in.good(), "IoError", "cannot open spectrum file " + m.spectrum_file);
        return parse_spectrum(in);
    }
    std::string name = m.builtin.empty() ? "identity" : m.builtin;
    SigmaName sigma = parse_sigma_name(name);
    int M_for_weights = m.has_M ? m.M : 2; // identity ignores it
    require(sigma == SigmaName::Identity || m.has_M, "UsageError",
            "--M is required for builtin " + name);
    return builtin_sigma(sigma, M_for_weights, phi);
}

// Full model for experiment commands: needs M and N; phi == M/N.
ModelSpec resolve_model(const ModelOptions& m) {
    require(m.has_M && m.has_N, "UsageError", "this command needs --M and --N (or a model file)");
    double phi = static_cast<double>(m.M) / static_cast<double>(m.N);
    if (m.has_phi)
        require(std::fabs(m.phi - phi) <= 1e-12 * std::max(1.0, phi), "UsageError",
                "--phi contradicts M/N");
    ModelSpec spec{m.M, m.N, resolve_spectrum(m, phi), RadiusLaw::by_name(m.radius)};
    spec.validate();
    return spec;
}

std::string setting_name(const ModelOptions& m) {
    std::string spectrum = !m.spectrum_file.empty() ? fs::path(m.spectrum_file).stem().string()
                                                    : (m.builtin.empty() ? "identity" : m.builtin);
    return spectrum + "_" + m.radius;
}

fs::path cache_dir_or_default(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("TWEDGE_CACHE")) return env;
    return "twedge-cache";
}

json cells_to_json(const TableResult& res) {
    json out;
    out["experiment"] = res.experiment;
    out["master_seed"] = res.master_seed;
    json cfg = json::object();
    for (const auto& [k, v] : res.config_echo) cfg[k] = v;
    out["config"] = cfg;
    out["cells"] = json::array();
    for (const auto& c : res.cells) {
        json jc = {{"setting", c.setting},
                   {"statistic", c.statistic},
                   {"estimate", c.estimate},
                   {"reps", c.reps}};
        if (c.has_se) jc["se"] = c.se;
        out["cells"].push_back(jc);
    }
    return out;
}

void emit_result(const TableResult& res, const CommonOptions& common) {
    if (common.json_out) {
        std::cout << cells_to_json(res).dump(2) << "\n";
    } else {
        std::printf("experiment %s (seed %llu)\n", res.experiment.c_str(),
                    static_cast<unsigned long long>(res.master_seed));
        for (const auto& [k, v] : res.config_echo) std::printf("  %s = %s\n", k.c_str(), v.c_str());
        std::printf("%-24s %-22s %12s %10s %8s\n", "setting", "statistic", "estimate", "se", "reps");
        for (const auto& c : res.cells) {
            if (c.has_se)
                std::printf("%-24s %-22s %12.6f %10.6f %8d\n", c.setting.c_str(), c.statistic.c_str(),
                            c.estimate, c.se, c.reps);
            else
                std::printf("%-24s %-22s %12.6f %10s %8d\n", c.setting.c_str(), c.statistic.c_str(),
                            c.estimate, "-", c.reps);
        }
    }
    if (!common.out_dir.empty()) {
        fs::create_directories(common.out_dir);
        write_csv(res, result_filename(common.out_dir, res.experiment, res.master_seed));
        write_summary(res, result_filename(common.out_dir, res.experiment, res.master_seed, "txt"));
    }
}

int default_reps(const CommonOptions& common, int desk, int heavy) {
    return common.profile == "heavy" ? heavy : desk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral-edge quantities and Monte-Carlo edge-universality checks\n"
                 "for sample covariance matrices of elliptically distributed data"};
    app.require_subcommand(1);

    ModelOptions model;
    CommonOptions common;
    std::string cache_flag;
    std::string edge_from;
    double alpha = 0.05;
    std::vector<double> nus;
    std::vector<int> n_ladder = {100, 200, 400};
    std::vector<double> etas = {0.05};
    std::vector<double> e_offsets = {0.0};
    std::string radius_b = "pearson2";
    std::uint64_t seed_b = 0;
    bool has_seed_b = false;
    int calib_dim = 500, calib_reps = 10000;
    std::uint64_t calib_seed = 1;
    std::vector<double> probs;

    auto add_common = [&](CLI::App* cmd, bool /*needs_seed: checked after the model file*/) {
        cmd->add_option("--seed", common.seed, "master seed (all randomness flows from it)");
        cmd->add_option("--reps", common.reps, "Monte-Carlo replicates");
        cmd->add_option("--workers", common.workers, "worker threads (replicate-parallel)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--out", common.out_dir, "directory for CSV + summary output");
        cmd->add_option("--profile", common.profile, "desk|heavy default sizes")
            ->check(CLI::IsMember({"desk", "heavy"}));
        cmd->add_flag("--json", common.json_out, "emit a JSON document on stdout");
        cmd->add_option("--cache-dir", cache_flag, "calibration cache directory (env TWEDGE_CACHE)");
    };

    // --- edge
    auto* edge_cmd = app.add_subcommand("edge", "deterministic edge quantities c, lambda_plus, gamma");
    add_model_flags(edge_cmd, model);
    edge_cmd->add_flag("--json", common.json_out, "emit JSON");

    // --- simulate
    auto* sim_cmd = app.add_subcommand("simulate", "emit rescaled largest-eigenvalue samples");
    add_model_flags(sim_cmd, model);
    add_common(sim_cmd, true);
    sim_cmd->add_option("--edge-from", edge_from, "reuse edge parameters from an 'edge --json' file");

    // --- table1
    auto* t1_cmd = app.add_subcommand("table1", "empirical CDF at the TW reference percentiles");
    add_model_flags(t1_cmd, model);
    add_common(t1_cmd, true);

    // --- test-size
    auto* size_cmd = app.add_subcommand("test-size", "null rejection rate of the eigengap ratio test");
    add_model_flags(size_cmd, model);
    add_common(size_cmd, true);
    size_cmd->add_option("--alpha", alpha, "nominal level")->check(CLI::Range(1e-6, 1.0));
    size_cmd->add_option("--calib-dim", calib_dim, "calibration GOE dimension");
    size_cmd->add_option("--calib-reps", calib_reps, "calibration replicates");
    size_cmd->add_option("--calib-seed", calib_seed, "calibration master seed");

    // --- test-power
    auto* power_cmd = app.add_subcommand("test-power", "rejection rate under the rank-one alternative");
    add_model_flags(power_cmd, model);
    add_common(power_cmd, true);
    power_cmd->add_option("--nu", nus, "signal strengths (repeatable)")->required();
    power_cmd->add_option("--alpha", alpha, "nominal level")->check(CLI::Range(1e-6, 1.0));
    power_cmd->add_option("--calib-dim", calib_dim, "calibration GOE dimension");
    power_cmd->add_option("--calib-reps", calib_reps, "calibration replicates");
    power_cmd->add_option("--calib-seed", calib_seed, "calibration master seed");

    // --- calibrate-tw
    auto* ctw_cmd = app.add_subcommand("calibrate-tw", "GOE percentiles of dim^(2/3)(lambda_1 - 2)");
    add_common(ctw_cmd, true);
    ctw_cmd->add_option("--dim", calib_dim, "GOE dimension");
    ctw_cmd->add_option("--probs", probs, "percentile probabilities (default: TW table)");

    // --- calibrate-onatski
    auto* con_cmd = app.add_subcommand("calibrate-onatski", "GOE critical value of the eigengap ratio");
    add_common(con_cmd, true);
    con_cmd->add_option("--dim", calib_dim, "GOE dimension");
    con_cmd->add_option("--alpha", alpha, "nominal level")->check(CLI::Range(1e-6, 0.999999));

    // --- locallaw
    auto* ll_cmd = app.add_subcommand("locallaw", "median (N eta)|m_N - m| over a z grid");
    add_model_flags(ll_cmd, model);
    add_common(ll_cmd, true);
    ll_cmd->add_option("--eta", etas, "imaginary parts (repeatable)");
    ll_cmd->add_option("--e-offset", e_offsets, "E = lambda_plus + offset (repeatable)");

    // --- rigidity
    auto* rig_cmd = app.add_subcommand("rigidity", "N^(2/3)|lambda_1 - lambda_plus| across an N ladder");
    add_model_flags(rig_cmd, model);
    add_common(rig_cmd, true);
    rig_cmd->add_option("--N-ladder", n_ladder, "ladder of sample sizes (repeatable)");

    // --- universality
    auto* uni_cmd = app.add_subcommand("universality", "KS distance of rescaled lambda_1 between radius laws");
    add_model_flags(uni_cmd, model);
    add_common(uni_cmd, true);
    uni_cmd->add_option("--radius-b", radius_b, "second radius law");
    auto* seed_b_opt = uni_cmd->add_option("--seed-b", seed_b, "master seed for the second sample");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: UsageError: " << e.what() << "\n";
        return 2;
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        capture_model_presence(cmd, model);
        bool has_seed = opt_count(cmd, "--seed") > 0;
        apply_model_file(model, common.seed, has_seed);
        has_seed_b = seed_b_opt->count() > 0;
        // reproducibility is mandatory for every randomized command
        require(cmd == edge_cmd || has_seed, "UsageError",
                "--seed is required (flag or model-file key)");

        if (cmd == edge_cmd) {
            double phi = model.has_phi ? model.phi
                                       : (model.has_M && model.has_N
                                              ? static_cast<double>(model.M) / model.N
                                              : (fail("UsageError", "edge needs --phi or --M with --N"), 0.0));
            auto spectrum = resolve_spectrum(model, phi);
            auto edge = edge_params(spectrum, phi);
            if (common.json_out) {
                json out = {{"phi", phi},
                            {"c", edge.c},
                            {"lambda_plus", edge.lambda_plus},
                            {"gamma", edge.gamma},
                            {"condition_margin", edge.condition_margin}};
                out["spectrum"] = json::array();
                for (const auto& a : spectrum.atoms())
                    out["spectrum"].push_back({{"value", a.value}, {"weight", a.weight}});
                std::cout << out.dump(2) << "\n";
            } else {
                std::printf("phi              = %.12g\n", phi);
                std::printf("c                = %.12g\n", edge.c);
                std::printf("lambda_plus      = %.12g\n", edge.lambda_plus);
                std::printf("gamma            = %.12g\n", edge.gamma);
                std::printf("condition_margin = %.12g\n", edge.condition_margin);
            }
            return 0;
        }

        if (cmd == sim_cmd) {
            ModelSpec spec = resolve_model(model);
            int reps = common.reps > 0 ? common.reps : default_reps(common, 200, 2000);
            EdgeParams edge;
            if (!edge_from.empty()) {
                std::ifstream in(edge_from);
                require(in.good(), "IoError", "cannot open " + edge_from);
                json j = json::parse(in);
                edge.c = j.at("c").get<double>();
                edge.lambda_plus = j.at("lambda_plus").get<double>();
                edge.gamma = j.at("gamma").get<double>();
                edge.condition_margin = j.at("condition_margin").get<double>();
            } else {
                edge = edge_params(spec.spectrum, spec.phi());
            }
            std::vector<double> lambda1(static_cast<std::size_t>(reps));
            for_each_replicate(reps, common.workers, [&](int r) {
                RngStream rng(common.seed, static_cast<std::uint64_t>(r));
                lambda1[static_cast<std::size_t>(r)] =
                    gram_eigenvalues(sample_data_matrix(spec, rng)).largest();
            });
            if (common.json_out) {
                json out = {{"experiment", "simulate"},
                            {"master_seed", common.seed},
                            {"edge",
                             {{"c", edge.c},
                              {"lambda_plus", edge.lambda_plus},
                              {"gamma", edge.gamma},
                              {"condition_margin", edge.condition_margin}}}};
                out["samples"] = json::array();
                for (int r = 0; r < reps; ++r) {
                    double lam = lambda1[static_cast<std::size_t>(r)];
                    out["samples"].push_back({{"rep", r},
                                              {"lambda1", lam},
                                              {"rescaled", rescale_largest(lam, edge, spec.N)}});
                }
                std::cout << out.dump(2) << "\n";
            } else {
                std::printf("rep,lambda1,rescaled\n");
                for (int r = 0; r < reps; ++r) {
                    double lam = lambda1[static_cast<std::size_t>(r)];
                    std::printf("%d,%.17g,%.17g\n", r, lam, rescale_largest(lam, edge, spec.N));
                }
            }
            return 0;
        }

        if (cmd == t1_cmd) {
            Table1Config cfg;
            cfg.model = resolve_model(model);
            cfg.setting_name = setting_name(model);
            cfg.reps = common.reps > 0 ? common.reps : default_reps(common, 2000, 10000);
            cfg.master_seed = common.seed;
            cfg.workers = common.workers;
            emit_result(run_table1(cfg), common);
            return 0;
        }

        if (cmd == size_cmd || cmd == power_cmd) {
            auto dir = cache_dir_or_default(cache_flag);
            auto path = calibration_cache_path(dir, StatisticKind::OnatskiRatio, calib_dim,
                                               calib_reps, calib_seed, alpha);
            require(fs::exists(path), "MissingCalibration",
                    path.string() + " not found; run calibrate-onatski first");
            auto calib = load_calibration(path);
            if (cmd == size_cmd) {
                SizeConfig cfg;
                cfg.settings = {{setting_name(model), resolve_model(model)}};
                cfg.reps = common.reps > 0 ? common.reps : default_reps(common, 2000, 10000);
                cfg.alpha = alpha;
                cfg.master_seed = common.seed;
                cfg.workers = common.workers;
                emit_result(run_size(cfg, calib), common);
            } else {
                PowerConfig cfg;
                cfg.settings = {{setting_name(model), resolve_model(model)}};
                cfg.nus = nus;
                cfg.reps = common.reps > 0 ? common.reps : default_reps(common, 1000, 10000);
                cfg.alpha = alpha;
                cfg.master_seed = common.seed;
                cfg.workers = common.workers;
                emit_result(run_power(cfg, calib), common);
            }
            return 0;
        }

        if (cmd == ctw_cmd || cmd == con_cmd) {
            auto dir = cache_dir_or_default(cache_flag);
            fs::create_directories(dir);
            if (common.profile == "heavy" && ctw_cmd->count("--dim") == 0 && con_cmd->count("--dim") == 0)
                calib_dim = 3000;
            int reps = common.reps > 0 ? common.reps : default_reps(common, 10000, 30000);
            CalibrationResult cal;
            fs::path path;
            if (cmd == ctw_cmd) {
                std::vector<double> ps = probs;
                if (ps.empty())
                    for (const auto& [x, p] : tw1_table().points) ps.push_back(p);
                cal = goe_percentiles(calib_dim, reps, ps, common.seed, common.workers);
                path = calibration_cache_path(dir, StatisticKind::TwEdge, calib_dim, reps, common.seed);
            } else {
                cal = onatski_critical(calib_dim, reps, alpha, common.seed, common.workers);
                path = calibration_cache_path(dir, StatisticKind::OnatskiRatio, calib_dim, reps,
                                              common.seed, alpha);
            }
            save_calibration(cal, path);
            if (common.json_out) {
                json out = {{"kind", statistic_kind_name(cal.statistic_kind)},
                            {"dim", cal.dim},
                            {"reps", cal.reps},
                            {"master_seed", cal.master_seed},
                            {"discarded", cal.discarded},
                            {"file", path.string()}};
                out["percentiles"] = json::array();
                for (const auto& [p, v] : cal.percentile_estimates)
                    out["percentiles"].push_back({{"prob", p}, {"value", v}});
                std::cout << out.dump(2) << "\n";
            } else {
                std::printf("wrote %s\n", path.string().c_str());
                for (const auto& [p, v] : cal.percentile_estimates)
                    std::printf("  p=%.4f  value=%.6f\n", p, v);
            }
            return 0;
        }

        if (cmd == ll_cmd) {
            LocalLawConfig cfg;
            cfg.model = resolve_model(model);
            auto edge = edge_params(cfg.model.spectrum, cfg.model.phi());
            for (double off : e_offsets)
                for (double eta : etas) {
                    require(eta > 0.0, "UsageError", "--eta must be positive");
                    cfg.z_grid.push_back({edge.lambda_plus + off, eta});
                }
            cfg.reps = common.reps > 0 ? common.reps : default_reps(common, 200, 1000);
            cfg.master_seed = common.seed;
            cfg.workers = common.workers;
            emit_result(run_locallaw(cfg), common);
            return 0;
        }

        if (cmd == rig_cmd) {
            RigidityConfig cfg;
            cfg.sigma = parse_sigma_name(model.builtin.empty() ? "identity" : model.builtin);
            cfg.radius = RadiusLaw::by_name(model.radius);
            cfg.phi = model.has_phi ? model.phi : 1.0;
            cfg.n_ladder = n_ladder;
            cfg.reps = common.reps > 0 ? common.reps : default_reps(common, 500, 2000);
            cfg.master_seed = common.seed;
            cfg.workers = common.workers;
            emit_result(run_rigidity(cfg), common);
            return 0;
        }

        if (cmd == uni_cmd) {
            UniversalityConfig cfg;
            cfg.model_a = resolve_model(model);
            ModelOptions model_b_opts = model;
            model_b_opts.radius = radius_b;
            cfg.model_b = resolve_model(model_b_opts);
            cfg.reps = common.reps > 0 ? common.reps : default_reps(common, 2000, 10000);
            cfg.seed_a = common.seed;
            cfg.seed_b = has_seed_b ? seed_b : common.seed;
            cfg.workers = common.workers;
            emit_result(run_universality(cfg), common);
            return 0;
        }

        fail("UsageError", "no subcommand dispatched");
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == "UsageError" ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: Internal: " << e.what() << "\n";
        return 1;
    }
}
