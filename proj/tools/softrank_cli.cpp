// softrank: soft-rank two-sample statistics and knockoff experiments.
//
//   softrank stat --set stat.statistic=sre a.csv b.csv
//   softrank saturate --config saturate.ini --out runs/sat
//   softrank train --config train.ini --out runs/model
//   softrank generate --set generate.model=runs/model/model.json --set generate.data=x.csv --out runs/gen
//   softrank filter --config filter.ini --out runs/filter
//   softrank bench --config bench.ini --seed 7 --threads 4 --out runs/bench
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "softrank/softrank.hpp"

namespace fs = std::filesystem;
using namespace softrank;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;
constexpr int kNumericError = 3;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir = "softrank-out";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int threads = 1;
};

void declare_run(Config& c) { c.declare("run", "seed", "0"); }

void declare_kernel(Config& c) { c.declare("kernel", "bandwidths", "1,2,4,8,16,32,64,128"); }

void declare_sinkhorn(Config& c) {
    c.declare("sinkhorn", "max_iters", "10000");
    c.declare("sinkhorn", "tolerance", "1e-6");
    c.declare("sinkhorn", "epsilon_scaling", "true");
    c.declare("sinkhorn", "halton_start", "1");
}

void declare_data(Config& c) {
    c.declare("data", "kind", "gaussian_ar1");
    c.declare("data", "path", "");
    c.declare("data", "d", "30");
    c.declare("data", "n", "1000");
    c.declare("data", "rho", "0.5");
    c.declare("data", "mixture_rhos", "0.3,0.5,0.7");
    c.declare("data", "mixture_means", "0,0,0");
    c.declare("data", "mixture_weights", "0.3333333333333333,0.3333333333333333,0.3333333333333334");
    c.declare("data", "dof", "3");
    c.declare("data", "sparsity", "9");
}

void declare_training(Config& c) {
    c.declare("training", "epsilon", "10");
    c.declare("training", "lambda_so", "1");
    c.declare("training", "delta_corr", "1");
    c.declare("training", "learning_rate", "0.01");
    c.declare("training", "batch_size", "500");
    c.declare("training", "epochs", "100");
    c.declare("training", "sinkhorn_iterations", "100");
    c.declare("training", "halton_start", "1");
    c.declare("training", "momentum", "0");
    c.declare("training", "hidden_layers", "6");
    c.declare("training", "hidden_multiplier", "5");
    c.declare("training", "leaky_slope", "0.01");
}

void declare_lasso(Config& c) {
    c.declare("lasso", "tolerance", "1e-10");
    c.declare("lasso", "max_iters", "100000");
}

GaussianMixtureKernel read_kernel(const Config& c) {
    GaussianMixtureKernel k;
    k.bandwidths = c.get_doubles("kernel", "bandwidths");
    k.validate();
    return k;
}

RankConfig read_ranks(const Config& c) {
    RankConfig r;
    r.sinkhorn.max_iters = static_cast<int>(c.get_int("sinkhorn", "max_iters"));
    r.sinkhorn.tolerance = c.get_double("sinkhorn", "tolerance");
    r.sinkhorn.epsilon_scaling = c.get_bool("sinkhorn", "epsilon_scaling");
    r.halton_start = c.get_int("sinkhorn", "halton_start");
    return r;
}

SynthSpec read_synth(const Config& c) {
    SynthSpec s;
    if (c.get("data", "kind") != "csv") s.kind = parse_synth_kind(c.get("data", "kind"));
    s.d = c.get_int("data", "d");
    s.n = c.get_int("data", "n");
    s.rho = c.get_double("data", "rho");
    s.mixture_rhos = c.get_doubles("data", "mixture_rhos");
    s.mixture_means = c.get_doubles("data", "mixture_means");
    s.mixture_weights = c.get_doubles("data", "mixture_weights");
    s.dof = c.get_double("data", "dof");
    s.sparsity = c.get_int("data", "sparsity");
    s.seed = derive_seed(c.get_seed("run", "seed"), 0);
    return s;
}

TrainingConfig read_training(const Config& c) {
    TrainingConfig t;
    t.epsilon = c.get_double("training", "epsilon");
    t.lambda_so = c.get_double("training", "lambda_so");
    t.delta_corr = c.get_double("training", "delta_corr");
    t.learning_rate = c.get_double("training", "learning_rate");
    t.batch_size = c.get_int("training", "batch_size");
    t.epochs = static_cast<int>(c.get_int("training", "epochs"));
    t.sinkhorn_iterations = static_cast<int>(c.get_int("training", "sinkhorn_iterations"));
    t.halton_start = c.get_int("training", "halton_start");
    t.momentum = c.get_double("training", "momentum");
    t.architecture.hidden_layers = static_cast<int>(c.get_int("training", "hidden_layers"));
    t.architecture.hidden_multiplier = static_cast<int>(c.get_int("training", "hidden_multiplier"));
    t.architecture.leaky_slope = c.get_double("training", "leaky_slope");
    t.kernel = read_kernel(c);
    t.seed = derive_seed(c.get_seed("run", "seed"), 1);
    try {
        t.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    return t;
}

LassoConfig read_lasso(const Config& c) {
    LassoConfig l;
    l.tolerance = c.get_double("lasso", "tolerance");
    l.max_iters = static_cast<int>(c.get_int("lasso", "max_iters"));
    return l;
}

/// Resolves file, overrides and --seed into the command's schema.
void resolve(Config& c, const CommonOptions& opt) {
    if (!opt.config_path.empty()) c.load(opt.config_path);
    for (const auto& o : opt.overrides) c.set_override(o);
    if (opt.seed_given && c.has("run", "seed")) c.set("run", "seed", std::to_string(opt.seed));
}

/// Output directory bookkeeping: config echo up front, manifest at the end.
class RunDirectory {
public:
    RunDirectory(const std::string& command, const CommonOptions& opt, const Config& config)
        : command_(command), opt_(opt), dir_(opt.out_dir), start_(std::chrono::steady_clock::now()) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
        std::ofstream echo(dir_ / "config.ini", std::ios::binary);
        echo << "# resolved configuration for 'softrank " << command << "'\n" << config.echo();
        if (!echo) throw IoError("cannot write config echo in '" + dir_.string() + "'");
        seed_ = config.has("run", "seed") ? config.get("run", "seed") : "";
    }

    std::string path(const std::string& name) {
        outputs_.push_back(name);
        return (dir_ / name).string();
    }

    void finish(nlohmann::json extra = nlohmann::json::object()) {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        nlohmann::json manifest = {
            {"program", "softrank"},
            {"version", kVersion},
            {"command", command_},
            {"seed", seed_},
            {"threads", opt_.threads},
            {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
            {"compiler", __VERSION__},
            {"wall_seconds", wall},
            {"outputs", outputs_},
        };
        for (auto& [k, v] : extra.items()) manifest[k] = v;
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << manifest.dump(2) << '\n';
        if (!out) throw IoError("cannot write manifest in '" + dir_.string() + "'");
    }

private:
    std::string command_;
    CommonOptions opt_;
    fs::path dir_;
    std::chrono::steady_clock::time_point start_;
    std::string seed_;
    std::vector<std::string> outputs_{"config.ini"};
};

int cmd_stat(const CommonOptions& opt, const std::vector<std::string>& files) {
    Config c;
    c.declare("stat", "statistic", "sre");
    c.declare("stat", "epsilon", "10");
    c.declare("stat", "x", "");
    c.declare("stat", "y", "");
    declare_kernel(c);
    declare_sinkhorn(c);
    resolve(c, opt);
    if (files.size() == 2) {
        c.set("stat", "x", files[0]);
        c.set("stat", "y", files[1]);
    } else if (!files.empty()) {
        throw ConfigError("stat: expected two CSV files");
    }
    if (c.get("stat", "x").empty() || c.get("stat", "y").empty()) throw ConfigError("stat: two CSV files are required");
    const Statistic stat = [&] {
        try {
            return parse_statistic(c.get("stat", "statistic"));
        } catch (const InvalidInput& e) {
            throw ConfigError(e.what());
        }
    }();
    const double eps = c.get_double("stat", "epsilon");
    const GaussianMixtureKernel kernel = read_kernel(c);
    const RankConfig ranks = read_ranks(c);
    const Matrix x = read_matrix(c.get("stat", "x"));
    const Matrix y = read_matrix(c.get("stat", "y"));
    if (x.cols() != y.cols())
        throw DimensionError("stat: width mismatch, " + std::to_string(x.cols()) + " vs " + std::to_string(y.cols()));
    const double value = evaluate_statistic(stat, x, y, eps, kernel, ranks);
    std::cout << format_double(value) << '\n';
    return 0;
}

int cmd_saturate(const CommonOptions& opt) {
    Config c;
    declare_run(c);
    c.declare("saturate", "statistic", "srmmd");
    c.declare("saturate", "shifts", "-10,-5,-3,-1.5,-1,-0.5,0,0.5,1,1.5,3,5,10");
    c.declare("saturate", "n", "256");
    c.declare("saturate", "d", "2,8");
    c.declare("saturate", "epsilon", "0,1,10");
    c.declare("saturate", "repetitions", "20");
    declare_kernel(c);
    declare_sinkhorn(c);
    resolve(c, opt);

    SaturationConfig sc;
    try {
        sc.statistic = parse_statistic(c.get("saturate", "statistic"));
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    sc.shifts = c.get_doubles("saturate", "shifts");
    sc.sample_sizes.clear();
    for (auto v : c.get_ints("saturate", "n")) sc.sample_sizes.push_back(v);
    sc.dimensions.clear();
    for (auto v : c.get_ints("saturate", "d")) sc.dimensions.push_back(v);
    sc.epsilons = c.get_doubles("saturate", "epsilon");
    sc.repetitions = static_cast<int>(c.get_int("saturate", "repetitions"));
    sc.seed = c.get_seed("run", "seed");
    sc.threads = opt.threads;
    sc.kernel = read_kernel(c);
    sc.ranks = read_ranks(c);

    RunDirectory run("saturate", opt, c);
    const auto rows = saturation_curve(sc);
    write_lines(run.path("saturation.csv"), saturation_csv(rows));
    run.finish({{"rows", rows.size()}});
    return 0;
}

DataMatrix load_training_data(const Config& c) {
    if (c.get("data", "kind") == "csv") {
        if (c.get("data", "path").empty()) throw ConfigError("data.path is required when data.kind = csv");
        return read_matrix(c.get("data", "path"));
    }
    return generate(read_synth(c));
}

int cmd_train(const CommonOptions& opt) {
    Config c;
    declare_run(c);
    declare_data(c);
    declare_training(c);
    declare_kernel(c);
    resolve(c, opt);
    const TrainingConfig tc = read_training(c);
    RunDirectory run("train", opt, c);
    const DataMatrix data = with_context("train, stage data", [&] { return load_training_data(c); });
    const TrainedGenerator model = with_context("train, stage optimize", [&] { return train(data, tc); });
    save_model(model, run.path("model.json"));

    std::vector<std::string> epochs{"epoch,total,srmmd_term,second_order_term,decorrelation_term"};
    std::vector<std::string> steps{"epoch,step,total,srmmd_term,second_order_term,decorrelation_term"};
    for (const auto& e : model.log) {
        epochs.push_back(csv_row(e.epoch, e.mean.total, e.mean.srmmd_term, e.mean.second_order_term,
                                 e.mean.decorrelation_term));
        for (std::size_t s = 0; s < e.steps.size(); ++s) {
            const auto& b = e.steps[s];
            steps.push_back(csv_row(e.epoch, s, b.total, b.srmmd_term, b.second_order_term, b.decorrelation_term));
        }
    }
    write_lines(run.path("training_log.csv"), epochs);
    write_lines(run.path("training_steps.csv"), steps);
    run.finish({{"rows", data.rows()}, {"d", data.cols()}});
    return 0;
}

int cmd_generate(const CommonOptions& opt) {
    Config c;
    declare_run(c);
    c.declare("generate", "model", "");
    c.declare("generate", "data", "");
    resolve(c, opt);
    if (c.get("generate", "model").empty() || c.get("generate", "data").empty())
        throw ConfigError("generate: generate.model and generate.data are required");
    RunDirectory run("generate", opt, c);
    const TrainedGenerator model = load_model(c.get("generate", "model"));
    const Matrix x = read_matrix(c.get("generate", "data"));
    const Matrix knock = with_context("generate, stage sample", [&] {
        return sample_knockoffs(model, x, derive_seed(c.get_seed("run", "seed"), 2));
    });
    write_matrix(run.path("knockoffs.csv"), knock);
    run.finish({{"rows", x.rows()}});
    return 0;
}

int cmd_filter(const CommonOptions& opt) {
    Config c;
    c.declare("filter", "x", "");
    c.declare("filter", "knockoffs", "");
    c.declare("filter", "y", "");
    c.declare("filter", "support", "");
    c.declare("filter", "alpha", "0.1");
    c.declare("filter", "q", "0.1");
    declare_lasso(c);
    resolve(c, opt);
    for (const char* key : {"x", "knockoffs", "y"})
        if (c.get("filter", key).empty()) throw ConfigError(std::string("filter: filter.") + key + " is required");
    std::vector<Index> support;
    for (auto j : c.get_ints("filter", "support")) support.push_back(j);
    const double alpha = c.get_double("filter", "alpha");
    const double q = c.get_double("filter", "q");
    const LassoConfig lasso_cfg = read_lasso(c);

    RunDirectory run("filter", opt, c);
    const Matrix x = read_matrix(c.get("filter", "x"));
    const Matrix knock = read_matrix(c.get("filter", "knockoffs"));
    const Matrix y = read_matrix(c.get("filter", "y"));
    if (y.cols() != 1) throw DimensionError("filter: response file must have one column");
    const SelectionOutcome sel = with_context("filter, stage select", [&] {
        return knockoff_filter(x, knock, y.col(0), alpha, q, support, lasso_cfg);
    });
    std::vector<std::string> rows{"feature,w,selected"};
    std::vector<char> chosen(x.cols(), 0);
    for (Index j : sel.selected) chosen[j] = 1;
    for (Index j = 0; j < x.cols(); ++j) rows.push_back(csv_row(j, sel.w(j), static_cast<int>(chosen[j])));
    write_lines(run.path("selection.csv"), rows);
    std::vector<std::string> summary{"tau,n_selected,fdp,power,q,alpha"};
    summary.push_back(csv_row(sel.tau, sel.selected.size(), sel.fdp, sel.power, q, alpha));
    write_lines(run.path("summary.csv"), summary);
    run.finish();
    std::cout << "selected " << sel.selected.size() << " of " << x.cols() << " features (tau = "
              << format_double(sel.tau) << ")\n";
    return 0;
}

int cmd_bench(const CommonOptions& opt) {
    Config c;
    declare_run(c);
    c.declare("bench", "settings", "gaussian_ar1");
    c.declare("bench", "train_rows", "1000");
    c.declare("bench", "filter_rows", "200");
    c.declare("bench", "num_nonzero", "10");
    c.declare("bench", "amplitudes", "5,10,15,20");
    c.declare("bench", "random_signs", "true");
    c.declare("bench", "repetitions", "50");
    c.declare("bench", "alphas", "0.01,0.03,0.1,0.3");
    c.declare("bench", "q", "0.1");
    c.declare("bench", "save_models", "false");
    declare_data(c);
    declare_training(c);
    declare_kernel(c);
    declare_lasso(c);
    resolve(c, opt);

    BenchConfig bc;
    bc.settings.clear();
    try {
        for (const auto& s : c.get_list("bench", "settings")) bc.settings.push_back(parse_synth_kind(s));
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    bc.synth = read_synth(c);
    bc.train_rows = c.get_int("bench", "train_rows");
    bc.filter_rows = c.get_int("bench", "filter_rows");
    bc.num_nonzero = c.get_int("bench", "num_nonzero");
    bc.amplitudes = c.get_doubles("bench", "amplitudes");
    bc.random_signs = c.get_bool("bench", "random_signs");
    bc.repetitions = static_cast<int>(c.get_int("bench", "repetitions"));
    bc.alphas = c.get_doubles("bench", "alphas");
    bc.q = c.get_double("bench", "q");
    bc.seed = c.get_seed("run", "seed");
    bc.threads = opt.threads;
    bc.training = read_training(c);
    bc.lasso = read_lasso(c);

    RunDirectory run("bench", opt, c);
    const BenchResult result = run_bench(bc);
    write_lines(run.path("bench_detail.csv"), bench_detail_csv(result.rows));
    write_lines(run.path("bench_aggregate.csv"), bench_aggregate_csv(result.aggregates));
    if (c.get_bool("bench", "save_models"))
        for (std::size_t s = 0; s < result.models.size(); ++s)
            save_model(result.models[s], run.path("model_" + to_string(bc.settings[s]) + ".json"));
    run.finish({{"training_seconds", result.training_seconds}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Soft-rank two-sample statistics and knockoff variable selection"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOptions opt;
    std::vector<std::string> files;
    const auto add_common = [&](CLI::App* sub, bool writes) {
        sub->add_option("--config", opt.config_path, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", opt.overrides, "Override one key, section.key=value (repeatable)")
            ->allow_extra_args(false);
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t s) { opt.seed = s, opt.seed_given = true; }, "Global seed");
        sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
        if (writes) sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
    };

    auto* stat = app.add_subcommand("stat", "Two-sample statistic of two CSV matrices");
    add_common(stat, false);
    stat->add_option("files", files, "Two CSV files")->expected(0, 2);
    auto* saturate = app.add_subcommand("saturate", "Statistic against shift size for shifted uniforms");
    add_common(saturate, true);
    auto* train_cmd = app.add_subcommand("train", "Train a knockoff generator");
    add_common(train_cmd, true);
    auto* generate_cmd = app.add_subcommand("generate", "Sample knockoffs from a trained model");
    add_common(generate_cmd, true);
    auto* filter_cmd = app.add_subcommand("filter", "Knockoff filter on given design, knockoffs and response");
    add_common(filter_cmd, true);
    auto* bench = app.add_subcommand("bench", "FDR and power benchmark over amplitudes and repetitions");
    add_common(bench, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (stat->parsed()) return cmd_stat(opt, files);
        if (saturate->parsed()) return cmd_saturate(opt);
        if (train_cmd->parsed()) return cmd_train(opt);
        if (generate_cmd->parsed()) return cmd_generate(opt);
        if (filter_cmd->parsed()) return cmd_filter(opt);
        if (bench->parsed()) return cmd_bench(opt);
    } catch (const ConfigError& e) {
        std::cerr << "softrank: configuration error: " << e.what() << '\n';
        return kUsageError;
    } catch (const NumericOverflow& e) {
        std::cerr << "softrank: numeric failure: " << e.what() << '\n';
        return kNumericError;
    } catch (const std::exception& e) {
        std::cerr << "softrank: " << e.what() << '\n';
        return kDataError;
    }
    return kUsageError;
}
