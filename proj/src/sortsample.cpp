#include "bonet/sortsample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "bonet/errors.hpp"
#include "bonet/rng.hpp"

namespace bonet {

Strategy strategy_from_string(const std::string& s) {
    if (s == "random") return Strategy::random;
    if (s == "random_sorted") return Strategy::random_sorted;
    if (s == "reweight_partial") return Strategy::reweight_partial;
    if (s == "reweight_sorted") return Strategy::reweight_sorted;
    throw ConfigError("unknown trajectory strategy '" + s + "'");
}

std::string strategy_to_string(Strategy s) {
    switch (s) {
        case Strategy::random: return "random";
        case Strategy::random_sorted: return "random_sorted";
        case Strategy::reweight_partial: return "reweight_partial";
        case Strategy::reweight_sorted: return "reweight_sorted";
    }
    return "?";
}

BinPartition partition_bins(const OfflineDataset& ds, int n_bins) {
    if (n_bins < 1) throw ConfigError("partition_bins: n_bins must be >= 1");
    if (ds.n() < 1) throw ConfigError("partition_bins: dataset is empty");
    BinPartition p;
    p.n_bins = n_bins;
    const double y_min = ds.values.minCoeff();
    const double y_max = ds.values.maxCoeff();
    p.y_best = y_max;
    const double width = (y_max - y_min) / n_bins;
    p.edges.resize(n_bins + 1);
    p.y_mid.resize(n_bins);
    for (int i = 0; i <= n_bins; ++i) p.edges[i] = y_min + width * i;
    p.edges[n_bins] = y_max;
    for (int i = 0; i < n_bins; ++i) p.y_mid[i] = y_min + width * i + width / 2.0;
    p.members.assign(n_bins, {});
    if (width == 0.0) {
        // all values identical; everything collapses into bin 1
        p.degenerate = true;
        for (int i = 0; i < ds.n(); ++i) p.members[0].push_back(i);
        p.y_mid.setConstant(y_min);
        return p;
    }
    for (int i = 0; i < ds.n(); ++i) {
        // membership in (edge[b], edge[b+1]]; the minimum closes bin 0
        int b = static_cast<int>(std::ceil((ds.values[i] - y_min) / width)) - 1;
        b = std::min(std::max(b, 0), n_bins - 1);
        p.members[b].push_back(i);
    }
    return p;
}

Eigen::VectorXd bin_scores(const BinPartition& p, double K, double tau) {
    K = std::max(K, 1e-8);
    tau = std::max(tau, 1e-8);
    Eigen::VectorXd s(p.n_bins);
    for (int i = 0; i < p.n_bins; ++i) {
        const double size = static_cast<double>(p.members[i].size());
        if (size == 0.0) {
            s[i] = 0.0;
            continue;
        }
        s[i] = size / (size + K) * std::exp(-std::abs(p.y_best - p.y_mid[i]) / tau);
    }
    return s;
}

double regret_percentile(const OfflineDataset& ds, double percentile, double f_star) {
    if (ds.n() < 1) throw ConfigError("regret_percentile: dataset is empty");
    std::vector<double> regrets(ds.n());
    for (int i = 0; i < ds.n(); ++i) regrets[i] = f_star - ds.values[i];
    std::sort(regrets.begin(), regrets.end());
    const double pos = percentile / 100.0 * (ds.n() - 1);
    const int lo = static_cast<int>(pos);
    const int hi = std::min(lo + 1, ds.n() - 1);
    return regrets[lo] + (pos - lo) * (regrets[hi] - regrets[lo]);
}

std::pair<double, double> default_hyperparams(const OfflineDataset& ds,
                                              std::optional<double> f_star_override) {
    if (ds.n() < 1) throw ConfigError("default_hyperparams: dataset is empty");
    const double K = 0.03 * ds.n();
    const double f_star =
        std::max(f_star_override.value_or(ds.f_star_ref), ds.values.maxCoeff());
    const double tau = std::max(regret_percentile(ds, 10.0, f_star), 1e-8);
    return {K, tau};
}

std::vector<int> allocate_counts(const Eigen::VectorXd& scores, int T) {
    if (T < 1) throw ConfigError("allocate_counts: T must be >= 1");
    const double total = scores.sum();
    if (!(total > 0.0)) throw ConfigError("allocate_counts: bin scores sum to zero");
    const int n_bins = static_cast<int>(scores.size());
    std::vector<int> counts(n_bins, 0);
    int assigned = 0;
    for (int i = 1; i < n_bins; ++i) {
        counts[i] = static_cast<int>(std::floor(T * scores[i] / total));
        assigned += counts[i];
    }
    counts[0] = T - assigned;
    return counts;
}

Eigen::VectorXd augment_rb(const Eigen::VectorXd& values, double f_star) {
    if (values.size() > 0 && f_star < values.maxCoeff() - 1e-9) {
        throw std::domain_error("augment_rb: f_star below the maximum trajectory value");
    }
    Eigen::VectorXd budgets(values.size());
    double acc = 0.0;
    for (int t = static_cast<int>(values.size()) - 1; t >= 0; --t) {
        acc += f_star - values[t];
        budgets[t] = acc;
    }
    return budgets;
}

namespace {

// First n entries of a Fisher-Yates shuffle of `pool`.
std::vector<int> draw_without_replacement(const std::vector<int>& pool, int n, Rng& rng) {
    std::vector<int> idx = pool;
    std::vector<int> out;
    out.reserve(n);
    for (int k = 0; k < n; ++k) {
        const std::size_t j = k + rng.uniform_int(idx.size() - k);
        std::swap(idx[k], idx[j]);
        out.push_back(idx[k]);
    }
    return out;
}

}  // namespace

Trajectory sample_trajectory(const OfflineDataset& ds, const BinPartition& partition, int T,
                             Strategy strategy, std::uint64_t seed, double f_star_used) {
    Rng rng(seed);
    std::vector<int> picked;
    picked.reserve(T);
    bool fallback = false;

    if (strategy == Strategy::random || strategy == Strategy::random_sorted) {
        std::vector<int> all(ds.n());
        std::iota(all.begin(), all.end(), 0);
        const int without = std::min(T, ds.n());
        picked = draw_without_replacement(all, without, rng);
        for (int k = without; k < T; ++k) {
            picked.push_back(static_cast<int>(rng.uniform_int(ds.n())));
            fallback = true;
        }
    } else {
        if (static_cast<int>(partition.counts.size()) != partition.n_bins) {
            throw ConfigError("sample_trajectory: partition counts not allocated");
        }
        for (int b = 0; b < partition.n_bins; ++b) {
            const auto& pool = partition.members[b];
            const int want = partition.counts[b];
            if (want == 0) continue;
            if (pool.empty()) {
                throw ConfigError("sample_trajectory: nonzero count on empty bin " +
                                  std::to_string(b));
            }
            const int without = std::min<int>(want, static_cast<int>(pool.size()));
            auto drawn = draw_without_replacement(pool, without, rng);
            picked.insert(picked.end(), drawn.begin(), drawn.end());
            for (int k = without; k < want; ++k) {
                picked.push_back(pool[rng.uniform_int(pool.size())]);
                fallback = true;
            }
        }
    }

    if (strategy == Strategy::random_sorted || strategy == Strategy::reweight_sorted) {
        std::stable_sort(picked.begin(), picked.end(),
                         [&](int a, int b) { return ds.values[a] < ds.values[b]; });
    }

    Trajectory traj;
    traj.points.resize(T, ds.dim());
    traj.values.resize(T);
    for (int t = 0; t < T; ++t) {
        traj.points.row(t) = ds.points.row(picked[t]);
        traj.values[t] = ds.values[picked[t]];
    }
    traj.f_star_used = f_star_used;
    traj.budgets = augment_rb(traj.values, f_star_used);
    traj.replacement_fallback = fallback;
    return traj;
}

TrajectoryDataset build_traj_dataset(const OfflineDataset& ds, const SortSampleParams& params,
                                     std::uint64_t seed) {
    TrajectoryDataset td;
    td.task = ds.task;
    td.strategy = params.strategy;
    td.T = params.T;
    td.n_bins = params.n_bins;
    td.seed = seed;
    td.f_star_used = std::max(params.f_star.value_or(ds.f_star_ref), ds.values.maxCoeff());

    auto [k_default, tau_default] = default_hyperparams(ds, td.f_star_used);
    td.K = params.K.value_or(k_default);
    td.tau = params.tau.value_or(tau_default);

    BinPartition partition = partition_bins(ds, params.n_bins);
    partition.scores = bin_scores(partition, td.K, td.tau);
    partition.counts = allocate_counts(partition.scores, params.T);

    td.trajectories.reserve(params.num_trajs);
    for (int i = 0; i < params.num_trajs; ++i) {
        td.trajectories.push_back(sample_trajectory(ds, partition, params.T, params.strategy,
                                                    seed_stream(seed, "traj", i),
                                                    td.f_star_used));
    }
    return td;
}

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::string header_field(const std::vector<std::string>& fields, const std::string& key) {
    const std::string prefix = key + "=";
    for (const auto& f : fields) {
        if (f.rfind(prefix, 0) == 0) return f.substr(prefix.size());
    }
    throw FormatError("trajectory header missing field '" + key + "'");
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw FormatError("bad numeric field '" + s + "'");
    return v;
}

}  // namespace

void save_trajs(const TrajectoryDataset& td, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out << "v1;task=" << td.task.name << ";T=" << td.T << ";num_trajs=" << td.num_trajs()
        << ";strategy=" << strategy_to_string(td.strategy) << ";K=" << fmt17(td.K)
        << ";tau=" << fmt17(td.tau) << ";nbins=" << td.n_bins
        << ";fstar=" << fmt17(td.f_star_used) << ";seed=" << td.seed << "\n";
    for (const auto& traj : td.trajectories) {
        for (int t = 0; t < td.T; ++t) {
            out << fmt17(traj.budgets[t]);
            for (int j = 0; j < traj.points.cols(); ++j) out << "," << fmt17(traj.points(t, j));
            out << "," << fmt17(traj.values[t]) << "\n";
        }
    }
}

TrajectoryDataset load_trajs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing trajectory file " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw FormatError("empty trajectory file " + path.string());
    auto fields = split(header, ';');
    if (fields.empty() || fields[0] != "v1") {
        throw FormatError("unsupported trajectory format version in " + path.string());
    }
    TrajectoryDataset td;
    td.task = find_task(header_field(fields, "task")).spec;
    td.T = static_cast<int>(parse_double(header_field(fields, "T")));
    const int num_trajs = static_cast<int>(parse_double(header_field(fields, "num_trajs")));
    td.strategy = strategy_from_string(header_field(fields, "strategy"));
    td.K = parse_double(header_field(fields, "K"));
    td.tau = parse_double(header_field(fields, "tau"));
    td.n_bins = static_cast<int>(parse_double(header_field(fields, "nbins")));
    td.f_star_used = parse_double(header_field(fields, "fstar"));
    td.seed = static_cast<std::uint64_t>(parse_double(header_field(fields, "seed")));
    const int d = td.task.dim;
    std::string line;
    td.trajectories.resize(num_trajs);
    for (auto& traj : td.trajectories) {
        traj.points.resize(td.T, d);
        traj.values.resize(td.T);
        traj.budgets.resize(td.T);
        traj.f_star_used = td.f_star_used;
        for (int t = 0; t < td.T; ++t) {
            if (!std::getline(in, line) || line.empty()) {
                throw FormatError("trajectory file truncated in " + path.string());
            }
            auto cells = split(line, ',');
            if (static_cast<int>(cells.size()) != d + 2) {
                throw FormatError("trajectory row has " + std::to_string(cells.size()) +
                                  " fields, expected " + std::to_string(d + 2));
            }
            traj.budgets[t] = parse_double(cells[0]);
            for (int j = 0; j < d; ++j) traj.points(t, j) = parse_double(cells[1 + j]);
            traj.values[t] = parse_double(cells[d + 1]);
        }
    }
    return td;
}

}  // namespace bonet
