#include "wsnsync/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

namespace wsnsync {

double mse(std::span<const MeasurementRecord> records) {
    long double sum = 0.0L;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (!r.used() || !r.t_est)
            continue;
        const long double e = static_cast<long double>(r.error()->count()) * 1e-12L;
        sum += e * e;
        ++n;
    }
    if (n == 0)
        throw NoDataError("no usable measurements to compute MSE over");
    return static_cast<double>(sum / static_cast<long double>(n));
}

double analytic_mse_relaying(int num_layers, double sigma_s) {
    return static_cast<double>(num_layers) * sigma_s * sigma_s / 2.0;
}

MeanWithError mean_with_error(std::span<const double> values) {
    MeanWithError out;
    out.n = values.size();
    if (values.empty()) {
        out.mean = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    long double sum = 0.0L;
    for (double v : values)
        sum += v;
    const long double mean = sum / static_cast<long double>(values.size());
    out.mean = static_cast<double>(mean);
    if (values.size() > 1) {
        long double ss = 0.0L;
        for (double v : values)
            ss += (v - mean) * (v - mean);
        const long double var = ss / static_cast<long double>(values.size() - 1);
        out.std_error = static_cast<double>(std::sqrt(var / static_cast<long double>(values.size())));
    }
    return out;
}

SweepRow summarize_run(const Scenario& scenario, const RunResult& result) {
    SweepRow row{.mode = scenario.mode, .num_layers = scenario.num_layers, .jitter_std_s = scenario.jitter_std_s, .seed = scenario.seed};
    for (const auto& r : result.records)
        (r.used() ? row.n_used : row.n_excluded) += 1;
    try {
        row.mse_s2 = mse(result.records);
    } catch (const NoDataError& e) {
        row.mse_s2 = std::numeric_limits<double>::quiet_NaN();
        row.error = e.what();
    }
    return row;
}

namespace {

auto row_key(const SweepRow& r) {
    return std::make_tuple(static_cast<int>(r.mode), r.num_layers, r.jitter_std_s, r.seed);
}

} // namespace

SweepResult sweep(const Scenario& base, const SweepGrid& grid, unsigned jobs) {
    std::vector<Scenario> points;
    for (SyncMode mode : grid.modes)
        for (int layers : grid.layers)
            for (double sigma : grid.jitter_stds)
                for (std::uint64_t seed : grid.seeds) {
                    Scenario s = base;
                    s.mode = mode;
                    s.num_layers = layers;
                    s.jitter_std_s = sigma;
                    s.seed = seed;
                    points.push_back(s);
                }

    SweepResult result;
    result.rows.resize(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            const Scenario& s = points[i];
            try {
                result.rows[i] = summarize_run(s, run(s));
            } catch (const std::exception& e) {
                SweepRow row{.mode = s.mode, .num_layers = s.num_layers, .jitter_std_s = s.jitter_std_s, .seed = s.seed};
                row.n_excluded = s.n_measurements;
                row.mse_s2 = std::numeric_limits<double>::quiet_NaN();
                row.error = e.what();
                result.rows[i] = row;
            }
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(points.size())));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const SweepRow& a, const SweepRow& b) { return row_key(a) < row_key(b); });
    return result;
}

SweepResult sweep_layers(const Scenario& base, std::span<const int> layers, std::span<const std::uint64_t> seeds,
                         unsigned jobs) {
    SweepGrid grid;
    grid.layers.assign(layers.begin(), layers.end());
    grid.jitter_stds = {base.jitter_std_s};
    grid.seeds.assign(seeds.begin(), seeds.end());
    return sweep(base, grid, jobs);
}

SweepResult sweep_jitter(const Scenario& base, std::span<const double> sigmas, std::span<const std::uint64_t> seeds,
                         unsigned jobs) {
    SweepGrid grid;
    grid.layers = {base.num_layers};
    grid.jitter_stds.assign(sigmas.begin(), sigmas.end());
    grid.seeds.assign(seeds.begin(), seeds.end());
    return sweep(base, grid, jobs);
}

std::vector<PointSummary> summarize(const SweepResult& result) {
    std::map<std::tuple<int, int, double>, std::vector<double>> groups;
    for (const auto& row : result.rows) {
        auto& bucket = groups[{static_cast<int>(row.mode), row.num_layers, row.jitter_std_s}];
        if (row.error.empty() && std::isfinite(row.mse_s2))
            bucket.push_back(row.mse_s2);
    }
    std::vector<PointSummary> out;
    for (const auto& [key, values] : groups) {
        const auto& [mode, layers, sigma] = key;
        out.push_back(PointSummary{static_cast<SyncMode>(mode), layers, sigma, mean_with_error(values)});
    }
    return out;
}

MeanWithError point_mse(const SweepResult& result, SyncMode mode, int num_layers, double jitter_std_s) {
    std::vector<double> values;
    for (const auto& row : result.rows)
        if (row.mode == mode && row.num_layers == num_layers && row.jitter_std_s == jitter_std_s
            && row.error.empty() && std::isfinite(row.mse_s2))
            values.push_back(row.mse_s2);
    return mean_with_error(values);
}

std::string format_real(double value) {
    if (std::isnan(value))
        return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::scientific);
    return std::string(buf, res.ptr);
}

void write_csv(const SweepResult& result, std::ostream& out, std::span<const std::string> comments) {
    for (const auto& c : comments)
        out << "# " << c << '\n';
    out << kCsvHeader << '\n';
    for (const auto& row : result.rows) {
        out << to_string(row.mode) << ',' << row.num_layers << ',' << format_real(row.jitter_std_s) << ','
            << row.seed << ',' << row.n_used << ',' << row.n_excluded << ',' << format_real(row.mse_s2) << '\n';
    }
}

void write_csv(const SweepResult& result, const std::filesystem::path& path, std::span<const std::string> comments) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    write_csv(result, out, comments);
    if (!out)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

namespace {

template <class T>
T parse_field(std::string_view text, std::size_t line_no, const char* name) {
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw std::runtime_error("CSV line " + std::to_string(line_no) + ": bad " + name + " '" + std::string(text)
                                 + "'");
    return value;
}

} // namespace

SweepResult read_csv(std::istream& in) {
    SweepResult result;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#')
            continue;
        if (!header_seen) {
            if (line != kCsvHeader)
                throw std::runtime_error("CSV line " + std::to_string(line_no) + ": unexpected header");
            header_seen = true;
            continue;
        }
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            f.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos)
                break;
            rest.remove_prefix(comma + 1);
        }
        if (f.size() != 7)
            throw std::runtime_error("CSV line " + std::to_string(line_no) + ": expected 7 fields");
        SweepRow row;
        const auto mode = parse_sync_mode(f[0]);
        if (!mode)
            throw std::runtime_error("CSV line " + std::to_string(line_no) + ": unknown mode");
        row.mode = *mode;
        row.num_layers = parse_field<int>(f[1], line_no, "num_layers");
        row.jitter_std_s = parse_field<double>(f[2], line_no, "jitter_std_s");
        row.seed = parse_field<std::uint64_t>(f[3], line_no, "seed");
        row.n_used = parse_field<int>(f[4], line_no, "n_used");
        row.n_excluded = parse_field<int>(f[5], line_no, "n_excluded");
        row.mse_s2 = parse_field<double>(f[6], line_no, "mse_s2");
        if (std::isnan(row.mse_s2))
            row.error = "failed run";
        result.rows.push_back(std::move(row));
    }
    if (!header_seen)
        throw std::runtime_error("CSV has no header");
    return result;
}

SweepResult read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    return read_csv(in);
}

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 90.0;
constexpr double kRight = 190.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fixed2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

} // namespace

std::string render_svg(const SweepResult& result) {
    const auto points = summarize(result);

    int x_min = std::numeric_limits<int>::max();
    int x_max = std::numeric_limits<int>::min();
    double y_lo = std::numeric_limits<double>::infinity();
    double y_hi = -std::numeric_limits<double>::infinity();
    std::map<std::pair<int, double>, std::vector<std::pair<int, double>>> series;
    for (const auto& p : points) {
        if (!(p.mse.mean > 0.0) || !std::isfinite(p.mse.mean))
            continue;
        series[{static_cast<int>(p.mode), p.jitter_std_s}].emplace_back(p.num_layers, p.mse.mean);
        x_min = std::min(x_min, p.num_layers);
        x_max = std::max(x_max, p.num_layers);
        y_lo = std::min(y_lo, std::log10(p.mse.mean));
        y_hi = std::max(y_hi, std::log10(p.mse.mean));
    }
    if (series.empty()) {
        x_min = 1;
        x_max = 20;
        y_lo = -20.0;
        y_hi = -15.0;
    }
    if (x_max == x_min)
        x_max = x_min + 1;
    double dec_lo = std::floor(y_lo);
    double dec_hi = std::ceil(y_hi);
    if (dec_hi <= dec_lo)
        dec_hi = dec_lo + 1.0;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double layers) { return kLeft + (layers - x_min) / (x_max - x_min) * plot_w; };
    auto sy = [&](double log_mse) { return kTop + (dec_hi - log_mse) / (dec_hi - dec_lo) * plot_h; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << fixed2(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
       << "MSE of estimated measurement time vs number of layers</text>\n";

    for (double d = dec_lo; d <= dec_hi + 1e-9; d += 1.0) {
        const double y = sy(d);
        os << "<line x1=\"" << fixed2(kLeft) << "\" y1=\"" << fixed2(y) << "\" x2=\"" << fixed2(kLeft + plot_w)
           << "\" y2=\"" << fixed2(y) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << fixed2(kLeft - 8) << "\" y=\"" << fixed2(y + 4) << "\" text-anchor=\"end\">1e"
           << static_cast<int>(d) << "</text>\n";
    }
    const int x_step = (x_max - x_min) > 20 ? 5 : 1;
    for (int x = x_min; x <= x_max; x += x_step) {
        os << "<text x=\"" << fixed2(sx(x)) << "\" y=\"" << fixed2(kTop + plot_h + 18)
           << "\" text-anchor=\"middle\">" << x << "</text>\n";
    }
    os << "<rect x=\"" << fixed2(kLeft) << "\" y=\"" << fixed2(kTop) << "\" width=\"" << fixed2(plot_w)
       << "\" height=\"" << fixed2(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << fixed2(kLeft + plot_w / 2) << "\" y=\"" << fixed2(kHeight - 16)
       << "\" text-anchor=\"middle\">number of layers</text>\n";
    os << "<text x=\"20\" y=\"" << fixed2(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
       << fixed2(kTop + plot_h / 2) << ")\">MSE (s^2)</text>\n";

    std::size_t color = 0;
    double legend_y = kTop + 10;
    for (const auto& [key, pts] : series) {
        const char* stroke = kPalette[color++ % std::size(kPalette)];
        const auto mode = static_cast<SyncMode>(key.first);
        os << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            os << (i ? " " : "") << fixed2(sx(pts[i].first)) << ',' << fixed2(sy(std::log10(pts[i].second)));
        os << "\"/>\n";
        for (const auto& [x, y] : pts)
            os << "<circle cx=\"" << fixed2(sx(x)) << "\" cy=\"" << fixed2(sy(std::log10(y))) << "\" r=\"3\" fill=\""
               << stroke << "\"/>\n";
        const double lx = kLeft + plot_w + 15;
        os << "<line x1=\"" << fixed2(lx) << "\" y1=\"" << fixed2(legend_y) << "\" x2=\"" << fixed2(lx + 25)
           << "\" y2=\"" << fixed2(legend_y) << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << fixed2(lx + 30) << "\" y=\"" << fixed2(legend_y + 4) << "\">" << to_string(mode)
           << " sigma=" << format_real(key.second) << "</text>\n";
        legend_y += 20;
    }
    os << "</svg>\n";
    return os.str();
}

void render_svg(const SweepResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << render_svg(result);
    if (!out)
        throw std::runtime_error("failed writing '" + path.string() + "'");
}

} // namespace wsnsync
