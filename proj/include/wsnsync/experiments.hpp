#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wsnsync/protocol.hpp"
#include "wsnsync/simnet.hpp"

namespace wsnsync {

/// No usable (non-excluded) measurement to average over.
class NoDataError : public std::runtime_error {
public:
    explicit NoDataError(const std::string& what) : std::runtime_error(what) {}
};

/// Mean over used records of (t_est - t_true)^2, in seconds^2.
double mse(std::span<const MeasurementRecord> records);

/// First-order relaying error variance: L * sigma^2 / 2.
double analytic_mse_relaying(int num_layers, double sigma_s);

struct MeanWithError {
    double mean = 0.0;
    double std_error = 0.0;  // sample std / sqrt(n); 0 for n < 2
    std::size_t n = 0;
};

MeanWithError mean_with_error(std::span<const double> values);

struct SweepRow {
    SyncMode mode = SyncMode::packet_relaying;
    int num_layers = 1;
    double jitter_std_s = 0.0;
    std::uint64_t seed = 0;
    int n_used = 0;
    int n_excluded = 0;
    double mse_s2 = 0.0;  // NaN when the run failed
    std::string error{};  // empty on success; not serialized

    friend bool operator==(const SweepRow& a, const SweepRow& b) {
        const bool same_mse = a.mse_s2 == b.mse_s2 || (a.mse_s2 != a.mse_s2 && b.mse_s2 != b.mse_s2);
        return a.mode == b.mode && a.num_layers == b.num_layers && a.jitter_std_s == b.jitter_std_s
               && a.seed == b.seed && a.n_used == b.n_used && a.n_excluded == b.n_excluded && same_mse;
    }
};

struct SweepResult {
    std::vector<SweepRow> rows;  // sorted by (mode, num_layers, jitter_std_s, seed)
    friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

struct SweepGrid {
    std::vector<SyncMode> modes{SyncMode::packet_relaying, SyncMode::time_translating};
    std::vector<int> layers;
    std::vector<double> jitter_stds;
    std::vector<std::uint64_t> seeds;
};

/// Runs every grid point on copies of `base`. Up to `jobs` runs execute in
/// parallel; the result does not depend on `jobs`. A failed run is recorded in
/// its row and does not stop the sweep.
SweepResult sweep(const Scenario& base, const SweepGrid& grid, unsigned jobs = 1);

/// Both modes, every layer count, at base.jitter_std_s.
SweepResult sweep_layers(const Scenario& base, std::span<const int> layers, std::span<const std::uint64_t> seeds,
                         unsigned jobs = 1);

/// Both modes, every jitter std, at base.num_layers.
SweepResult sweep_jitter(const Scenario& base, std::span<const double> sigmas, std::span<const std::uint64_t> seeds,
                         unsigned jobs = 1);

/// One sweep row from a finished run.
SweepRow summarize_run(const Scenario& scenario, const RunResult& result);

struct PointSummary {
    SyncMode mode;
    int num_layers;
    double jitter_std_s;
    MeanWithError mse;
};

/// Per (mode, layers, jitter) mean MSE over seeds, skipping failed rows.
std::vector<PointSummary> summarize(const SweepResult& result);

/// Mean MSE of the rows matching (mode, layers, jitter); NaN if none.
MeanWithError point_mse(const SweepResult& result, SyncMode mode, int num_layers, double jitter_std_s);

inline constexpr const char* kCsvHeader = "mode,num_layers,jitter_std_s,seed,n_used,n_excluded,mse_s2";

/// Each comment line is written as "# <comment>" ahead of the header.
void write_csv(const SweepResult& result, std::ostream& out, std::span<const std::string> comments = {});
void write_csv(const SweepResult& result, const std::filesystem::path& path,
               std::span<const std::string> comments = {});

/// Parses what write_csv produces; '#' lines are skipped. Throws std::runtime_error.
SweepResult read_csv(std::istream& in);
SweepResult read_csv(const std::filesystem::path& path);

/// Line chart of mean MSE against layer count, one polyline per (mode, jitter),
/// logarithmic vertical axis.
std::string render_svg(const SweepResult& result);
void render_svg(const SweepResult& result, const std::filesystem::path& path);

/// Shortest round-trip scientific rendering, e.g. "1e-17".
std::string format_real(double value);

} // namespace wsnsync
