#include "wsnsync/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "wsnsync/config.hpp"
#include "wsnsync/errors.hpp"
#include "wsnsync/experiments.hpp"

namespace wsnsync {

namespace {

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> layers;
    std::optional<std::string> mode;
    std::optional<double> jitter_std;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> seeds;
    std::optional<double> skew_ppm;
    std::optional<double> offset_bound;
    std::optional<std::string> pd;
    std::optional<std::string> out;
    std::optional<std::string> trace;
    std::optional<std::string> svg;
    std::optional<unsigned> jobs;
    bool no_compensation = false;
};

void add_scenario_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "JSON config file");
    app->add_option("--layers", f.layers, "layer count A or range A..B");
    app->add_option("--mode,--modes", f.mode, "relaying, ttg or both");
    app->add_option("--jitter-std", f.jitter_std, "link jitter std [s]");
    app->add_option("--seed", f.seed, "run seed (falls back to $WSNSIM_SEED)");
    app->add_option("--seeds", f.seeds, "seed range N..M");
    app->add_option("--skew-ppm", f.skew_ppm, "clock ratio bound [ppm]");
    app->add_option("--offset-bound", f.offset_bound, "clock offset bound [s]");
    app->add_option("--pd", f.pd, "gateway processing delay: zero, const:X or exp:X");
    app->add_option("--out", f.out, "output CSV path");
    app->add_flag("--no-compensation", f.no_compensation, "disable processing-delay compensation at the head");
}

Config load(const Flags& f) {
    Config c = f.config ? load_config_file(*f.config) : Config{};
    Scenario& s = c.scenario;
    if (f.jitter_std) {
        s.jitter_std_s = *f.jitter_std;
        c.jitter_stds = {*f.jitter_std};
    }
    if (f.skew_ppm) s.skew_bound_ppm = *f.skew_ppm;
    if (f.offset_bound) s.offset_bound_s = *f.offset_bound;
    if (f.pd) s.gateway_pd = ProcessingDelay::parse(*f.pd);
    if (f.no_compensation) s.compensate_pd = false;
    if (f.layers) {
        c.layers = parse_layer_range(*f.layers);
        s.num_layers = c.layers.front();
    }
    if (f.seeds)
        c.seeds = parse_seed_range(*f.seeds);
    if (f.seed) {
        s.seed = *f.seed;
        c.seed_given = true;
        if (!f.seeds)
            c.seeds = {*f.seed};
    } else if (!c.seed_given) {
        if (const char* env = std::getenv("WSNSIM_SEED"); env && *env) {
            const auto parsed = parse_seed_range(env);
            if (parsed.size() != 1)
                throw ConfigError("WSNSIM_SEED must be a single integer");
            s.seed = parsed.front();
            c.seed_given = true;
        }
    }
    if (f.mode) {
        if (*f.mode == "both") {
            c.modes = {SyncMode::packet_relaying, SyncMode::time_translating};
        } else {
            const auto m = parse_sync_mode(*f.mode);
            if (!m)
                throw ConfigError("--mode must be relaying, ttg or both, got '" + *f.mode + "'");
            c.modes = {*m};
            s.mode = *m;
        }
    }
    if (f.out) c.out = *f.out;
    if (f.trace) c.trace = *f.trace;
    if (f.svg) c.svg = *f.svg;
    if (f.jobs) {
        if (*f.jobs < 1)
            throw ConfigError("--jobs must be at least 1");
        c.jobs = *f.jobs;
    }
    for (int layers : c.layers)
        if (layers < 1 || layers > 64)
            throw ConfigError("--layers entries must be in [1, 64]");
    for (double sigma : c.jitter_stds)
        if (!(sigma >= 0.0))
            throw ConfigError("--jitter-std must be non-negative");
    s.validate();
    return c;
}

/// Output locations and the job count do not affect results, so they stay out
/// of the echo and repeated runs produce identical files wherever they land.
std::string provenance(const Config& c) {
    auto doc = config_to_json(c);
    for (const char* key : {"out", "svg", "trace", "jobs"})
        doc.erase(key);
    return "config: " + doc.dump();
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

int cmd_run(const Flags& f, std::ostream& out) {
    Config c = load(f);
    if (f.layers && c.layers.size() != 1)
        throw ConfigError("run takes a single --layers value");
    if (f.mode && *f.mode == "both")
        throw ConfigError("run takes --mode relaying or --mode ttg");
    const Scenario& s = c.scenario;

    const RunResult result = run(s, RunOptions{.capture_trace = c.trace.has_value()});

    const std::filesystem::path records_path = c.out.value_or("records.csv");
    {
        auto csv = open_output(records_path);
        csv << "# " << provenance(c) << '\n';
        csv << "index,t_true_ps,t_est_ps,error_ps,status\n";
        for (const auto& r : result.records) {
            csv << r.index << ',' << r.t_true.ps() << ',';
            if (r.t_est)
                csv << r.t_est->ps() << ',' << r.error()->count();
            else
                csv << ',';
            csv << ',' << to_string(r.status) << '\n';
        }
        if (!csv)
            throw std::runtime_error("failed writing '" + records_path.string() + "'");
    }
    if (c.trace) {
        auto tr = open_output(*c.trace);
        tr << "# " << provenance(c) << '\n';
        write_trace(result, tr);
        if (!tr)
            throw std::runtime_error("failed writing '" + c.trace->string() + "'");
    }

    const SweepRow row = summarize_run(s, result);
    out << "mode=" << to_string(s.mode) << " layers=" << s.num_layers << " seed=" << s.seed << '\n';
    if (!row.error.empty())
        throw std::runtime_error(row.error);
    out << "mse_s2=" << format_real(row.mse_s2) << " used=" << row.n_used << " excluded=" << row.n_excluded << '\n';
    return exit_ok;
}

int cmd_sweep(const Flags& f, std::ostream& out) {
    Config c = load(f);
    SweepGrid grid{c.modes, c.layers, c.jitter_stds, c.seeds};
    const SweepResult result = sweep(c.scenario, grid, c.jobs);

    const std::filesystem::path csv_path = c.out.value_or("sweep.csv");
    const std::vector<std::string> comments{provenance(c)};
    write_csv(result, csv_path, comments);
    if (c.svg)
        render_svg(result, *c.svg);

    std::size_t failed = 0;
    for (const auto& row : result.rows)
        failed += row.error.empty() ? 0 : 1;
    out << "rows=" << result.rows.size() << " failed=" << failed << " csv=" << csv_path.string() << '\n';
    for (const auto& p : summarize(result)) {
        out << to_string(p.mode) << " layers=" << p.num_layers << " jitter_std_s=" << format_real(p.jitter_std_s)
            << " mean_mse_s2=" << format_real(p.mse.mean) << " std_error=" << format_real(p.mse.std_error)
            << " seeds=" << p.mse.n << '\n';
    }
    return failed == 0 ? exit_ok : exit_runtime_error;
}

int cmd_oracle(std::optional<int> layers, std::optional<double> sigma, std::ostream& out) {
    if (!layers || !sigma)
        throw ConfigError("oracle needs a layer count and a jitter std (e.g. `oracle 20 1e-9`)");
    if (*layers < 1)
        throw ConfigError("oracle layer count must be at least 1");
    if (!(*sigma >= 0.0))
        throw ConfigError("oracle jitter std must be non-negative");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", analytic_mse_relaying(*layers, *sigma));
    out << buf << '\n';
    return exit_ok;
}

int cmd_plot(const std::string& input, const std::optional<std::string>& output, std::ostream& out) {
    const SweepResult result = read_csv(std::filesystem::path(input));
    const std::filesystem::path svg = output.value_or("sweep.svg");
    render_svg(result, svg);
    out << "svg=" << svg.string() << '\n';
    return exit_ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-hop WSN time synchronization simulator", "wsnsim"};
    app.require_subcommand(1);

    Flags run_flags;
    CLI::App* run_cmd = app.add_subcommand("run", "simulate one scenario");
    add_scenario_flags(run_cmd, run_flags);
    run_cmd->add_option("--trace", run_flags.trace, "write the event trace here");

    Flags sweep_flags;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the mode x layers x jitter x seed grid");
    add_scenario_flags(sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--svg", sweep_flags.svg, "also render an SVG chart");
    sweep_cmd->add_option("--jobs", sweep_flags.jobs, "parallel runs");

    std::optional<int> oracle_layers;
    std::optional<double> oracle_sigma;
    CLI::App* oracle_cmd = app.add_subcommand("oracle", "print the analytic relaying MSE L*sigma^2/2");
    oracle_cmd->add_option("L", oracle_layers, "number of layers");
    oracle_cmd->add_option("SIGMA", oracle_sigma, "jitter std [s]");
    oracle_cmd->add_option("--layers", oracle_layers, "number of layers");
    oracle_cmd->add_option("--jitter-std", oracle_sigma, "jitter std [s]");

    std::string plot_input;
    std::optional<std::string> plot_output;
    CLI::App* plot_cmd = app.add_subcommand("plot", "re-render an SVG from a sweep CSV");
    plot_cmd->add_option("csv", plot_input, "sweep CSV")->required();
    plot_cmd->add_option("--out", plot_output, "SVG path");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config_error;
    }

    try {
        if (run_cmd->parsed())
            return cmd_run(run_flags, out);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_flags, out);
        if (oracle_cmd->parsed())
            return cmd_oracle(oracle_layers, oracle_sigma, out);
        if (plot_cmd->parsed())
            return cmd_plot(plot_input, plot_output, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime_error;
    }
    return exit_config_error;
}

} // namespace wsnsync
