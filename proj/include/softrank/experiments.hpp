#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "softrank/filter.hpp"
#include "softrank/generator.hpp"
#include "softrank/io.hpp"
#include "softrank/parallel.hpp"
#include "softrank/stats.hpp"
#include "softrank/synth.hpp"

namespace softrank {

enum class Statistic { energy, mmd, re, sre, srmmd };

inline Statistic parse_statistic(const std::string& name) {
    if (name == "energy") return Statistic::energy;
    if (name == "mmd") return Statistic::mmd;
    if (name == "re") return Statistic::re;
    if (name == "sre") return Statistic::sre;
    if (name == "srmmd") return Statistic::srmmd;
    throw InvalidInput("unknown statistic '" + name + "' (expected energy, mmd, re, sre or srmmd)");
}

/// epsilon is ignored by energy, mmd and re. sre and srmmd with epsilon = 0
/// use hard ranks.
inline double evaluate_statistic(Statistic stat, const Matrix& x, const Matrix& y, double epsilon,
                                 const GaussianMixtureKernel& kernel = {}, const RankConfig& cfg = {}) {
    switch (stat) {
        case Statistic::energy: return energy_distance(x, y);
        case Statistic::mmd: return mmd_unbiased(x, y, kernel);
        case Statistic::re: return re(x, y, cfg);
        case Statistic::sre: return sre(x, y, epsilon, cfg);
        case Statistic::srmmd: return srmmd(x, y, epsilon, kernel, cfg);
    }
    throw InvalidInput("unknown statistic");
}

struct MeanAndError {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Sample mean and its standard error (n - 1 variance).
inline MeanAndError mean_and_error(const std::vector<double>& values) {
    MeanAndError out;
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    for (double v : values) out.mean += v;
    out.mean /= n;
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_error = std::sqrt(ss / (n - 1.0) / n);
    return out;
}

struct SaturationConfig {
    Statistic statistic = Statistic::srmmd;
    std::vector<double> shifts{-10, -5, -3, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 3, 5, 10};
    std::vector<Index> sample_sizes{256};
    std::vector<Index> dimensions{2, 8};
    std::vector<double> epsilons{0, 1, 10};
    int repetitions = 20;
    std::uint64_t seed = 0;
    int threads = 1;
    GaussianMixtureKernel kernel;
    RankConfig ranks;
};

struct SaturationRow {
    double shift = 0.0;
    Index n = 0;
    Index d = 0;
    double epsilon = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    int repetitions = 0;
};

/// Two-sample statistic of U[0,1]^d against U[s,s+1]^d, one row per grid
/// point. Repetition r of every shift reuses the same base draws
/// (derived from the seed, n, d, epsilon index and r), shifted by s.
inline std::vector<SaturationRow> saturation_curve(const SaturationConfig& cfg) {
    if (cfg.repetitions < 1) throw InvalidInput("saturate: need at least one repetition");
    struct Point {
        std::size_t config_index;
        Index n;
        Index d;
        double epsilon;
        double shift;
    };
    std::vector<Point> points;
    std::size_t config_index = 0;
    for (Index n : cfg.sample_sizes)
        for (Index d : cfg.dimensions)
            for (double eps : cfg.epsilons) {
                if (n < 2 || d < 1 || eps < 0.0) throw InvalidInput("saturate: need n >= 2, d >= 1, epsilon >= 0");
                for (double s : cfg.shifts) points.push_back({config_index, n, d, eps, s});
                ++config_index;
            }

    const std::size_t reps = static_cast<std::size_t>(cfg.repetitions);
    const auto values = parallel_map<double>(points.size() * reps, cfg.threads, [&](std::size_t item) {
        const Point& p = points[item / reps];
        const std::size_t rep = item % reps;
        Rng rng(derive_seed(derive_seed(cfg.seed, p.config_index), rep));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Matrix x(p.n, p.d), y(p.n, p.d);
        for (Index i = 0; i < p.n; ++i)
            for (Index j = 0; j < p.d; ++j) x(i, j) = unit(rng);
        for (Index i = 0; i < p.n; ++i)
            for (Index j = 0; j < p.d; ++j) y(i, j) = unit(rng) + p.shift;
        return evaluate_statistic(cfg.statistic, x, y, p.epsilon, cfg.kernel, cfg.ranks);
    });

    std::vector<SaturationRow> rows;
    for (std::size_t k = 0; k < points.size(); ++k) {
        const std::vector<double> sample(values.begin() + k * reps, values.begin() + (k + 1) * reps);
        const MeanAndError me = mean_and_error(sample);
        rows.push_back({points[k].shift, points[k].n, points[k].d, points[k].epsilon, me.mean, me.std_error,
                        cfg.repetitions});
    }
    return rows;
}

inline std::vector<std::string> saturation_csv(const std::vector<SaturationRow>& rows) {
    std::vector<std::string> lines{"s,n,d,epsilon,statistic,std_error,repetitions"};
    for (const auto& r : rows) lines.push_back(csv_row(r.shift, r.n, r.d, r.epsilon, r.mean, r.std_error, r.repetitions));
    return lines;
}

struct BenchConfig {
    std::vector<SynthKind> settings{SynthKind::gaussian_ar1};
    // Template for the feature distribution; kind, n and seed are filled in.
    SynthSpec synth;
    // Rows used to train the generator.
    Index train_rows = 1000;
    // Rows of each fresh regression problem.
    Index filter_rows = 200;
    Index num_nonzero = 10;
    std::vector<double> amplitudes{5, 10, 15, 20};
    bool random_signs = true;
    int repetitions = 50;
    std::vector<double> alphas{0.01, 0.03, 0.1, 0.3};
    double q = 0.1;
    std::uint64_t seed = 0;
    int threads = 1;
    TrainingConfig training;
    LassoConfig lasso;
};

struct BenchRow {
    std::string setting;
    double amplitude = 0.0;
    int repetition = 0;
    double fdp = 0.0;
    double power = 0.0;
    double tau = 0.0;
    Index n_selected = 0;
    double alpha = 0.0;
};

struct BenchAggregate {
    std::string setting;
    double amplitude = 0.0;
    double alpha = 0.0;
    int repetitions = 0;
    double mean_fdr = 0.0;
    double fdr_std_error = 0.0;
    double mean_power = 0.0;
    double power_std_error = 0.0;
};

struct BenchResult {
    std::vector<BenchRow> rows;
    std::vector<BenchAggregate> aggregates;
    std::vector<TrainedGenerator> models;
    std::vector<double> training_seconds;
};

/// Aggregates detail rows per (setting, amplitude, alpha), in first-seen order.
inline std::vector<BenchAggregate> aggregate_bench(const std::vector<BenchRow>& rows) {
    struct Group {
        BenchAggregate key;
        std::vector<double> fdp;
        std::vector<double> power;
    };
    std::vector<Group> groups;
    for (const auto& r : rows) {
        Group* g = nullptr;
        for (auto& candidate : groups)
            if (candidate.key.setting == r.setting && candidate.key.amplitude == r.amplitude &&
                candidate.key.alpha == r.alpha)
                g = &candidate;
        if (!g) {
            groups.push_back({});
            g = &groups.back();
            g->key.setting = r.setting;
            g->key.amplitude = r.amplitude;
            g->key.alpha = r.alpha;
        }
        g->fdp.push_back(r.fdp);
        g->power.push_back(r.power);
    }
    std::vector<BenchAggregate> out;
    for (auto& g : groups) {
        const MeanAndError f = mean_and_error(g.fdp);
        const MeanAndError p = mean_and_error(g.power);
        g.key.repetitions = static_cast<int>(g.fdp.size());
        g.key.mean_fdr = f.mean;
        g.key.fdr_std_error = f.std_error;
        g.key.mean_power = p.mean;
        g.key.power_std_error = p.std_error;
        out.push_back(g.key);
    }
    return out;
}

/// Seeds of one benchmark setting.
struct SettingSeeds {
    std::uint64_t train_data;
    std::uint64_t training;
    std::uint64_t repetitions;
};

inline SettingSeeds setting_seeds(std::uint64_t seed, std::size_t setting_index) {
    const std::uint64_t base = derive_seed(seed, setting_index);
    return {derive_seed(base, 0), derive_seed(base, 1), derive_seed(base, 2)};
}

/// One repetition for one trained model: fresh design, knockoffs, then a
/// response and a filter run per amplitude and alpha.
inline std::vector<BenchRow> bench_repetition(const BenchConfig& cfg, SynthKind kind, const TrainedGenerator& model,
                                              std::uint64_t rep_seed, int repetition) {
    SynthSpec spec = cfg.synth;
    spec.kind = kind;
    spec.n = cfg.filter_rows;
    spec.seed = derive_seed(rep_seed, 0);
    const DataMatrix x = generate(spec);
    const Matrix knock = sample_knockoffs(model, x, derive_seed(rep_seed, 1));

    std::vector<BenchRow> rows;
    for (std::size_t a = 0; a < cfg.amplitudes.size(); ++a) {
        ResponseSpec rs;
        rs.num_nonzero = cfg.num_nonzero;
        rs.amplitude = cfg.amplitudes[a];
        rs.random_signs = cfg.random_signs;
        rs.seed = derive_seed(rep_seed, 2 + a);
        const Response resp = response(x, rs);
        for (double alpha : cfg.alphas) {
            const SelectionOutcome sel = knockoff_filter(x, knock, resp.y, alpha, cfg.q, resp.support, cfg.lasso);
            rows.push_back({to_string(kind), cfg.amplitudes[a], repetition, sel.fdp, sel.power, sel.tau,
                            static_cast<Index>(sel.selected.size()), alpha});
        }
    }
    return rows;
}

/// synth -> train -> sample_knockoffs -> lasso -> threshold -> evaluate.
/// One model per setting; repetitions run in parallel and merge in index
/// order, so the output does not depend on the thread count.
inline BenchResult run_bench(const BenchConfig& cfg) {
    if (cfg.repetitions < 1) throw InvalidInput("bench: need at least one repetition");
    if (cfg.amplitudes.empty() || cfg.alphas.empty()) throw InvalidInput("bench: empty amplitude or alpha grid");
    BenchResult result;
    for (std::size_t s = 0; s < cfg.settings.size(); ++s) {
        const SynthKind kind = cfg.settings[s];
        const SettingSeeds seeds = setting_seeds(cfg.seed, s);
        SynthSpec spec = cfg.synth;
        spec.kind = kind;
        spec.n = cfg.train_rows;
        spec.seed = seeds.train_data;
        TrainingConfig tc = cfg.training;
        tc.seed = seeds.training;

        const std::string name = to_string(kind);
        const auto start = std::chrono::steady_clock::now();
        TrainedGenerator model = with_context("bench setting " + name + ", stage train", [&] {
            return train(generate(spec), tc);
        });
        result.training_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());

        const auto per_rep = parallel_map<std::vector<BenchRow>>(
            static_cast<std::size_t>(cfg.repetitions), cfg.threads, [&](std::size_t r) {
                return with_context("bench setting " + name + ", repetition " + std::to_string(r), [&] {
                    return bench_repetition(cfg, kind, model, derive_seed(seeds.repetitions, r), static_cast<int>(r));
                });
            });
        // Detail rows ordered by amplitude, then repetition, then alpha.
        for (double amp : cfg.amplitudes)
            for (const auto& rep_rows : per_rep)
                for (const auto& row : rep_rows)
                    if (row.amplitude == amp) result.rows.push_back(row);
        result.models.push_back(std::move(model));
    }
    result.aggregates = aggregate_bench(result.rows);
    return result;
}

inline std::vector<std::string> bench_detail_csv(const std::vector<BenchRow>& rows) {
    std::vector<std::string> lines{"setting,amplitude,repetition,fdp,power,tau,n_selected,alpha"};
    for (const auto& r : rows)
        lines.push_back(csv_row(r.setting, r.amplitude, r.repetition, r.fdp, r.power, r.tau, r.n_selected, r.alpha));
    return lines;
}

inline std::vector<std::string> bench_aggregate_csv(const std::vector<BenchAggregate>& rows) {
    std::vector<std::string> lines{
        "setting,amplitude,alpha,repetitions,mean_fdr,fdr_std_error,mean_power,power_std_error"};
    for (const auto& r : rows)
        lines.push_back(csv_row(r.setting, r.amplitude, r.alpha, r.repetitions, r.mean_fdr, r.fdr_std_error,
                                r.mean_power, r.power_std_error));
    return lines;
}

}  // namespace softrank
