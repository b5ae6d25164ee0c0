// Command-line front end: analyze | bounds | validate | robustness.
//
// Exit codes: 0 success (for analyze: a positive certified bound),
// 1 usage/config/runtime error, 2 nominal violation, 3 linearization proviso
// failure, 4 no positive disturbance level certified.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "resilience/config.hpp"
#include "resilience/io.hpp"
#include "resilience/resilience.hpp"

namespace fs = std::filesystem;
using namespace resilience;

namespace {

GainKind parse_method(const std::string& name) {
    if (name == "jordan") return GainKind::Jordan;
    if (name == "absolute") return GainKind::Absolute;
    if (name == "gronwall") return GainKind::Gronwall;
    throw ConfigError("unknown method '" + name + "'", "--method");
}

int status_exit_code(CertificateStatus status) {
    switch (status) {
        case CertificateStatus::Certified: return 0;
        case CertificateStatus::NominalViolation: return 2;
        case CertificateStatus::ProvisoFailed: return 3;
        case CertificateStatus::NotCertifiable: return 4;
    }
    return 1;
}

void print_certificate(const ResilienceCertificate& cert) {
    std::printf("status        %s\n", to_string(cert.status).c_str());
    std::printf("method        %s\n", to_string(cert.method).c_str());
    std::printf("eps_star      %.10g\n", cert.eps_star);
    if (cert.delta_bar > 0.0) {
        std::printf("  linear bound %.10g minus correction %.10g\n", cert.eps_star_linear,
                    cert.delta_bar);
    }
    std::printf("eta_star      %.10g\n", cert.eta_star);
    std::printf("L_omega       %.10g\n", cert.l_omega);
    std::printf("delta         %.10g\n", cert.delta);
    std::printf("samples       %zu\n", cert.samples_used);
    std::printf("rho_nominal   %.10g\n", cert.rho_nominal);
    for (const auto& w : cert.warnings) std::printf("note: %s\n", w.c_str());
}

int cmd_analyze(const std::string& config_path, const std::string& out_dir,
                const std::string& method_name) {
    const AnalysisConfig cfg = load_config(config_path);
    const GainKind method = parse_method(method_name);
    if (method == GainKind::Gronwall) {
        throw ConfigError("analyze supports jordan or absolute", "--method");
    }
    const AnalysisArtifacts art = run_analysis(cfg, method);

    fs::create_directories(out_dir);
    const fs::path cert_path = fs::path(out_dir) / "certificate.json";
    std::ofstream out(cert_path);
    out << certificate_to_json(art.certificate).dump(2) << "\n";
    out.close();

    print_certificate(art.certificate);
    std::printf("certificate written to %s\n", cert_path.string().c_str());
    return status_exit_code(art.certificate.status);
}

int cmd_bounds(const std::string& config_path, const std::string& out_dir,
               const std::string& method_name, double eps) {
    const AnalysisConfig cfg = load_config(config_path);
    const TimeGrid grid = cfg.grid();

    Matrix a;
    Vector offset;
    if (cfg.is_linear()) {
        a = cfg.linear->a;
        offset = Vector(cfg.state_dim(), 0.0);
    } else {
        const DynamicsExpr f = parse_dynamics(cfg.nonlinear->f, cfg.state_dim());
        a = resilience::detail::numeric_jacobian(f, cfg.nonlinear->equilibrium);
        offset = cfg.nonlinear->equilibrium;
    }
    Signal nominal = nominal_trajectory(a, vec_sub(cfg.x0, offset), grid);
    for (auto& sample : nominal.samples) {
        for (std::size_t i = 0; i < sample.size(); ++i) sample[i] += offset[i];
    }
    const SpectralDecomposition dec = decompose(a);
    const Matrix input = channel_matrix(cfg);

    std::vector<std::string> methods;
    if (method_name == "all") methods = {"jordan", "absolute", "gronwall"};
    else methods = {method_name};

    fs::create_directories(out_dir);
    const std::size_t n = cfg.state_dim();
    std::vector<SvgPanel> panels(n);
    for (std::size_t i = 0; i < n; ++i) {
        panels[i].title = "x" + std::to_string(i + 1) + " envelope, eps = " + std::to_string(eps);
        SvgCurve nom;
        nom.color = "#000";
        nom.width = 1.5;
        for (std::size_t k = 0; k < grid.count; ++k) {
            nom.x.push_back(grid.time(k));
            nom.y.push_back(nominal.samples[k][i]);
        }
        panels[i].curves.push_back(std::move(nom));
    }

    const char* colors[] = {"#d22", "#24d", "#b80"};
    std::size_t color_idx = 0;
    for (const std::string& name : methods) {
        const GainKind kind = parse_method(name);
        GainCurve gain;
        switch (kind) {
            case GainKind::Jordan: gain = jordan_gain(dec, grid); break;
            case GainKind::Absolute: gain = absolute_gain(a, dec, grid); break;
            case GainKind::Gronwall: gain = gronwall_gain(a, grid); break;
        }
        const EnvelopeFamily fam(nominal, gain, input);
        const Signal lo = fam.evaluate(Vector(fam.omega_dim(), -eps));
        const Signal hi = fam.evaluate(Vector(fam.omega_dim(), eps));

        const fs::path csv_path = fs::path(out_dir) / ("bounds_" + name + ".csv");
        std::ofstream csv(csv_path);
        csv << "t";
        for (std::size_t i = 1; i <= n; ++i) {
            csv << ",lo_" << i << ",nominal_" << i << ",hi_" << i;
        }
        csv << "\n";
        for (std::size_t k = 0; k < grid.count; ++k) {
            csv << resilience::detail::format_full(grid.time(k));
            for (std::size_t i = 0; i < n; ++i) {
                csv << "," << resilience::detail::format_full(lo.samples[k][i]) << ","
                    << resilience::detail::format_full(nominal.samples[k][i]) << ","
                    << resilience::detail::format_full(hi.samples[k][i]);
            }
            csv << "\n";
        }
        std::printf("wrote %s\n", csv_path.string().c_str());

        for (std::size_t i = 0; i < n; ++i) {
            for (const Signal* side : {&lo, &hi}) {
                SvgCurve c;
                c.color = colors[color_idx % 3];
                for (std::size_t k = 0; k < grid.count; ++k) {
                    c.x.push_back(grid.time(k));
                    c.y.push_back(side->samples[k][i]);
                }
                panels[i].curves.push_back(std::move(c));
            }
        }
        ++color_idx;
    }

    const fs::path svg_path = fs::path(out_dir) / "bounds.svg";
    write_text_file(svg_path.string(), render_svg(panels));
    std::printf("wrote %s\n", svg_path.string().c_str());
    return 0;
}

int cmd_validate(const std::string& config_path, const std::string& out_dir, double eps,
                 bool eps_given, std::size_t trials_override, std::uint64_t seed_override,
                 bool want_svg) {
    const AnalysisConfig cfg = load_config(config_path);
    double level = eps;
    if (!eps_given) {
        const fs::path cert_path = fs::path(out_dir) / "certificate.json";
        std::ifstream in(cert_path);
        if (!in) {
            throw MissingCertificate("no --eps given and no certificate at " +
                                     cert_path.string() + "; run analyze first");
        }
        nlohmann::json j;
        in >> j;
        level = j.at("eps_star").get<double>();
    }
    const std::size_t trials = trials_override ? trials_override : cfg.validate_trials;
    const std::uint64_t seed = seed_override ? seed_override : cfg.validate_seed;

    const ViolationReport report = run_validation(cfg, level, trials, seed);
    fs::create_directories(out_dir);
    const fs::path report_path = fs::path(out_dir) / "report.json";
    std::ofstream out(report_path);
    out << report_to_json(report).dump(2) << "\n";
    out.close();

    std::printf("eps            %.10g\n", report.eps);
    std::printf("trials         %zu\n", report.trials);
    std::printf("violations     %zu\n", report.violations);
    std::printf("worst rho      %.10g (seed %llu)\n", report.worst_robustness,
                static_cast<unsigned long long>(report.worst_seed));
    std::printf("report written to %s\n", report_path.string().c_str());

    if (want_svg) {
        const TimeGrid grid = cfg.grid();
        const VectorField field = system_field(cfg);
        const Matrix* channel = cfg.input_map ? &*cfg.input_map : nullptr;
        const std::size_t dist_dim = channel ? channel->cols() : cfg.state_dim();
        const std::size_t shown = std::min<std::size_t>(trials, 200);
        std::vector<SvgPanel> panels(cfg.state_dim());
        for (std::size_t i = 0; i < panels.size(); ++i) {
            panels[i].title = "x" + std::to_string(i + 1) + " under " +
                              std::to_string(shown) + " disturbances, eps = " +
                              std::to_string(level);
        }
        for (std::size_t j = 0; j < shown; ++j) {
            const std::uint64_t trial_seed =
                resilience::detail::splitmix64(seed ^ (j * 0x9e3779b97f4a7c15ULL));
            const DisturbanceKind kind = (j % 2 == 0) ? DisturbanceKind::PiecewiseConstantRandom
                                                      : DisturbanceKind::BangBangCorner;
            const DisturbanceSignal d(kind, dist_dim, level, 10.0 * grid.dt, trial_seed);
            const Signal traj = integrate(field, cfg.x0, d, grid, channel);
            for (std::size_t i = 0; i < panels.size(); ++i) {
                SvgCurve c;
                c.color = "#46a";
                c.width = 0.5;
                for (std::size_t k = 0; k < grid.count; k += 5) {
                    c.x.push_back(grid.time(k));
                    c.y.push_back(traj.samples[k][i]);
                }
                panels[i].curves.push_back(std::move(c));
            }
        }
        const fs::path svg_path = fs::path(out_dir) / "trajectories.svg";
        write_text_file(svg_path.string(), render_svg(panels));
        std::printf("wrote %s\n", svg_path.string().c_str());
    }
    return 0;
}

int cmd_robustness(const std::string& config_path, const std::string& signal_path) {
    const AnalysisConfig cfg = load_config(config_path);
    const StlPtr phi = parse(cfg.spec_text, cfg.state_dim());
    const Signal sig = read_signal_csv_file(signal_path);
    if (sig.state_dim() != cfg.state_dim()) {
        throw CsvFormatError("signal has " + std::to_string(sig.state_dim()) +
                             " states, config expects " + std::to_string(cfg.state_dim()));
    }
    const double rho = robustness(phi, sig, 0.0);
    std::printf("rho = %.12g\n", rho);
    std::printf("%s\n", rho > 0.0 ? "SAT" : "UNSAT");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified disturbance-tolerance bounds for STL specifications"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string method = "jordan";
    double eps = 1.0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    bool want_svg = false;
    std::string signal_path;

    CLI::App* analyze = app.add_subcommand("analyze", "compute a resilience certificate");
    analyze->add_option("--config", config_path, "analysis config JSON")->required();
    analyze->add_option("--out", out_dir, "output directory");
    analyze->add_option("--method", method, "jordan|absolute");

    CLI::App* bounds = app.add_subcommand("bounds", "emit envelope bound curves");
    bounds->add_option("--config", config_path, "analysis config JSON")->required();
    bounds->add_option("--out", out_dir, "output directory");
    bounds->add_option("--method", method, "jordan|absolute|gronwall|all");
    bounds->add_option("--eps", eps, "disturbance level for the curves");

    CLI::App* validate = app.add_subcommand("validate", "Monte-Carlo validation");
    validate->add_option("--config", config_path, "analysis config JSON")->required();
    validate->add_option("--out", out_dir, "output directory");
    CLI::Option* eps_opt = validate->add_option("--eps", eps, "disturbance level");
    validate->add_option("--trials", trials, "number of trajectories");
    validate->add_option("--seed", seed, "random seed");
    validate->add_flag("--svg", want_svg, "write a trajectory overlay SVG");

    CLI::App* rob = app.add_subcommand("robustness", "robustness of a recorded signal");
    rob->add_option("--config", config_path, "analysis config JSON")->required();
    rob->add_option("--signal", signal_path, "signal CSV (t,x1,...,xn)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) return cmd_analyze(config_path, out_dir, method);
        if (bounds->parsed()) return cmd_bounds(config_path, out_dir, method, eps);
        if (validate->parsed()) {
            return cmd_validate(config_path, out_dir, eps, eps_opt->count() > 0, trials, seed,
                                want_svg);
        }
        if (rob->parsed()) return cmd_robustness(config_path, signal_path);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
    return 1;
}
