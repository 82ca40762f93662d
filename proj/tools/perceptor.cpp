// perceptor: predicts winner-take-all classification accuracy from the first
// two moments of the postsynaptic sums at a network's output layer, and runs
// the self-contained validation experiments (reservoir recall, shallow
// random networks, correlated synthetic pairs).
//
// Exit codes: 0 success, 2 input error, 3 numeric failure.

#include "perceptor/analysis.hpp"
#include "perceptor/esn.hpp"
#include "perceptor/io.hpp"
#include "perceptor/numeric.hpp"
#include "perceptor/shallow.hpp"
#include "perceptor/stats.hpp"
#include "perceptor/synth.hpp"
#include "perceptor/theory.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr const char* kVersion = "0.1.0";

using json = nlohmann::ordered_json;
using namespace perceptor;

// ---------------------------------------------------------------------------
// Shared plumbing

struct CommonOptions {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out = "-";
};

void add_common(CLI::App* cmd, CommonOptions& common) {
    cmd->add_option("--seed", common.seed, "Random seed")->capture_default_str();
    cmd->add_option("--threads", common.threads,
                    "Worker threads (0 = PERCEPTOR_THREADS or hardware)");
    cmd->add_option("--out,-o", common.out, "Output path ('-' = stdout)")
        ->capture_default_str();
}

std::string quote_command_line(int argc, char** argv) {
    std::string cmd;
    for (int i = 0; i < argc; ++i) {
        if (i) cmd += ' ';
        cmd += argv[i];
    }
    return cmd;
}

std::string g_command_line;

/// Output sink: file or stdout.
class Sink {
  public:
    explicit Sink(const std::string& path) {
        if (path != "-") {
            file_.open(path);
            if (!file_) throw std::invalid_argument(path + ": cannot open for writing");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

  private:
    std::ofstream file_;
};

void write_provenance(std::ostream& out, std::uint64_t seed,
                      const std::vector<std::string>& extra = {}) {
    out << "# perceptor " << kVersion << '\n';
    out << "# command: " << g_command_line << '\n';
    out << "# seed: " << seed << '\n';
    for (const auto& line : extra) out << "# " << line << '\n';
}

void emit_json(const CommonOptions& common, json& report) {
    Sink sink(common.out);
    sink.stream() << report.dump(2) << '\n';
}

json base_report(std::uint64_t seed) {
    json report;
    report["tool"] = "perceptor";
    report["version"] = kVersion;
    report["command"] = g_command_line;
    report["seed"] = seed;
    return report;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

// "a,b,c" and "a..b" (ints, inclusive) with mixed forms allowed.
std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        const std::string token = text.substr(start, comma - start);
        if (!token.empty()) {
            const std::size_t dots = token.find("..");
            if (dots != std::string::npos) {
                const int lo = std::stoi(token.substr(0, dots));
                const int hi = std::stoi(token.substr(dots + 2));
                if (hi < lo) throw std::invalid_argument("bad range '" + token + "'");
                for (int v = lo; v <= hi; ++v) values.push_back(v);
            } else {
                values.push_back(std::stoi(token));
            }
        }
        start = comma + 1;
    }
    if (values.empty()) throw std::invalid_argument("empty integer list");
    return values;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        const std::string token = text.substr(start, comma - start);
        if (!token.empty()) values.push_back(std::stod(token));
        start = comma + 1;
    }
    if (values.empty()) throw std::invalid_argument("empty numeric list");
    return values;
}

Similarity parse_similarity(const std::string& name) {
    if (name == "dot") return Similarity::dot;
    if (name == "cosine") return Similarity::cosine;
    throw std::invalid_argument("unknown similarity '" + name + "'");
}

ReadoutPerceptron load_readout(const std::string& weights_path,
                               const std::string& bias_path, Similarity similarity) {
    ReadoutPerceptron readout;
    readout.weights = io::read_matrix_csv(weights_path);
    readout.similarity = similarity;
    if (!bias_path.empty()) {
        Eigen::MatrixXd bias = io::read_matrix_csv(bias_path);
        if (bias.rows() == 1) bias = bias.transpose().eval();
        if (bias.cols() != 1 || bias.rows() != readout.weights.rows())
            throw std::invalid_argument(bias_path +
                                        ": bias must be a 1xD or Dx1 matrix matching the "
                                        "readout");
        readout.bias = bias.col(0);
    }
    validate(readout);
    return readout;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
    CommonOptions common;
    std::string activations;
    std::string weights;
    std::string bias;
    std::string similarity = "dot";
    std::string method = "eq2";
    std::string priors = "empirical";
    long mc_samples = 100000;
    double bandwidth = 0.0;  // <= 0 means Silverman
    bool with_empirical = false;
};

int run_predict(const PredictArgs& args) {
    const ActivationSet acts = io::read_activations(args.activations);
    const ReadoutPerceptron readout =
        load_readout(args.weights, args.bias, parse_similarity(args.similarity));
    const SumSamples sums = compute_sums(acts, readout);
    std::optional<Eigen::VectorXd> priors;
    if (args.priors == "uniform") {
        priors = Eigen::VectorXd::Constant(sums.classes(), 1.0 / sums.classes());
    } else if (args.priors != "empirical") {
        throw std::invalid_argument("unknown priors mode '" + args.priors + "'");
    }
    const MomentStats stats = estimate_moments(sums, priors);

    PredictionReport prediction;
    if (args.method == "eq1") {
        prediction = predict_report_eq1(pooled_shared_stats(sums), stats.priors);
    } else if (args.method == "eq2") {
        prediction = predict_report_eq2(stats);
    } else if (args.method == "eq3-mc") {
        prediction = predict_report_eq3_mc(stats, args.mc_samples, args.common.seed,
                                           resolve_threads(args.common.threads));
    } else if (args.method == "kde") {
        std::optional<double> bandwidth;
        if (args.bandwidth > 0.0) bandwidth = args.bandwidth;
        prediction = predict_report_kde(sums, stats.priors, bandwidth);
    } else {
        throw std::invalid_argument("unknown method '" + args.method + "'");
    }

    json report = base_report(args.common.seed);
    report["method"] = method_name(prediction.method);
    report["similarity"] = args.similarity;
    report["classes"] = stats.classes();
    report["dim"] = readout.dim();
    report["counts"] = stats.counts;
    report["priors"] = vector_to_json(stats.priors);
    report["per_class"] = vector_to_json(prediction.per_class);
    report["aggregate"] = prediction.aggregate;
    if (prediction.mc_samples) report["mc_samples"] = *prediction.mc_samples;
    if (prediction.mc_stderr) report["mc_stderr"] = vector_to_json(*prediction.mc_stderr);
    if (args.method == "eq1") {
        const SharedDistractorStats shared = pooled_shared_stats(sums);
        report["shared_stats"] = {{"mu_h", shared.mu_h},
                                  {"sigma_h", shared.sigma_h},
                                  {"mu_r", shared.mu_r},
                                  {"sigma_r", shared.sigma_r}};
    }
    try {
        report["avg_correlation"] = avg_correlation(stats);
    } catch (const std::exception&) {
        report["avg_correlation"] = nullptr;  // degenerate or missing covariance
    }
    if (args.with_empirical) {
        const ClassAccuracy acc = accuracy_from_sums(sums);
        report["empirical"] = {{"per_class", vector_to_json(acc.per_class)},
                               {"aggregate", acc.aggregate}};
    }
    emit_json(args.common, report);
    return 0;
}

// ---------------------------------------------------------------------------
// esn

struct EsnArgs {
    CommonOptions common;
    int n = 100;
    int d = 2;
    double kappa = 4.0;
    std::string delays = "0..10";
    int seeds = 5;
    long train_len = 10000;
    long test_len = 10000;
    std::string readout = "codebook";
    double lambda = 0.01;
    std::string similarity = "cosine";
    std::string amplitudes;
    long mc_samples = 10000;
};

int run_esn(const EsnArgs& args) {
    esn::EsnConfig cfg;
    cfg.n = args.n;
    cfg.d = args.d;
    cfg.kappa = args.kappa;
    cfg.delays = parse_int_list(args.delays);
    cfg.train_len = args.train_len;
    cfg.test_len = args.test_len;
    cfg.seed = args.common.seed;
    cfg.ridge_lambda = args.lambda;
    cfg.similarity = parse_similarity(args.similarity);
    if (args.readout == "codebook") {
        cfg.readout = esn::ReadoutKind::codebook;
    } else if (args.readout == "regression") {
        cfg.readout = esn::ReadoutKind::regression;
    } else {
        throw std::invalid_argument("unknown readout '" + args.readout + "'");
    }
    if (!args.amplitudes.empty()) cfg.amplitudes = parse_double_list(args.amplitudes);

    esn::EsnRunOptions opt;
    opt.num_seeds = args.seeds;
    opt.mc_samples = args.mc_samples;
    opt.threads = resolve_threads(args.common.threads);
    const auto rows = esn::run_esn_experiment(cfg, opt);

    Sink sink(args.common.out);
    std::ostream& out = sink.stream();
    write_provenance(out, args.common.seed);
    out << "delay,empirical,eq1,eq2,eq3_mc,stderr\n";
    for (const auto& r : rows)
        out << r.delay << ',' << io::format_double(r.empirical) << ','
            << io::format_double(r.eq1) << ',' << io::format_double(r.eq2) << ','
            << io::format_double(r.eq3_mc) << ',' << io::format_double(r.eq3_stderr)
            << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// rvfl

struct RvflArgs {
    CommonOptions common;
    std::string data;
    std::string n_grid = "100";
    std::string lambda_grid = "0.01";
    std::string kappa_grid = "3";
    std::string readout = "ridge";
    int folds = 5;
};

int run_rvfl(const RvflArgs& args) {
    const shallow::Dataset ds = io::read_dataset(args.data);
    const shallow::ReadoutKind kind = [&] {
        if (args.readout == "centroid") return shallow::ReadoutKind::centroid;
        if (args.readout == "ridge") return shallow::ReadoutKind::ridge;
        throw std::invalid_argument("unknown readout '" + args.readout + "'");
    }();
    const shallow::GridResult grid = shallow::grid_search(
        ds, parse_int_list(args.n_grid), parse_double_list(args.lambda_grid),
        parse_double_list(args.kappa_grid), kind, args.folds, args.common.seed,
        resolve_threads(args.common.threads));

    Sink sink(args.common.out);
    std::ostream& out = sink.stream();
    write_provenance(out, args.common.seed,
                     {"dataset: " + ds.name,
                      "best: N=" + std::to_string(grid.best.n) +
                          " lambda=" + io::format_double(grid.best.lambda) +
                          " kappa=" + io::format_double(grid.best.kappa) +
                          " accuracy=" + io::format_double(grid.best.accuracy)});
    out << "N,lambda,kappa,fold,accuracy,pred_eq2_train,pred_eq2_test\n";
    for (const auto& cell : grid.cells)
        for (const auto& fold : cell.folds)
            out << cell.n << ',' << io::format_double(cell.lambda) << ','
                << io::format_double(cell.kappa) << ',' << fold.fold << ','
                << io::format_double(fold.accuracy) << ','
                << io::format_double(fold.pred_eq2_train) << ','
                << io::format_double(fold.pred_eq2_test) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// subproblem

struct SubproblemArgs {
    CommonOptions common;
    std::string activations;
    std::string weights;
    std::string bias;
    std::string similarity = "dot";
    std::string sizes = "2,4,8";
    int count = 40;
    std::string method = "eq2";
    long mc_samples = 100000;
    std::string network = "net0";
};

int run_subproblem(const SubproblemArgs& args) {
    const ActivationSet acts = io::read_activations(args.activations);
    const ReadoutPerceptron readout =
        load_readout(args.weights, args.bias, parse_similarity(args.similarity));
    if (args.count < 1) throw std::invalid_argument("count must be >= 1");
    if (args.method != "eq2" && args.method != "eq3-mc")
        throw std::invalid_argument("unknown method '" + args.method + "'");

    Sink sink(args.common.out);
    std::ostream& out = sink.stream();
    write_provenance(out, args.common.seed);
    out << "predicted,actual,size,network\n";
    std::mt19937_64 rng = make_rng(derive_seed(args.common.seed, 0x5B));
    for (int size : parse_int_list(args.sizes)) {
        for (int k = 0; k < args.count; ++k) {
            const analysis::SubProblem sub =
                analysis::random_subproblem(acts.classes(), size, rng);
            const auto [sub_acts, sub_readout] = analysis::restrict(acts, readout, sub);
            const SumSamples sums = compute_sums(sub_acts, sub_readout);
            // uniform priors over the included classes
            const Eigen::VectorXd priors = Eigen::VectorXd::Constant(size, 1.0 / size);
            const MomentStats stats = estimate_moments(sums, priors);
            const double predicted =
                args.method == "eq2"
                    ? predict_report_eq2(stats).aggregate
                    : predict_report_eq3_mc(stats, args.mc_samples,
                                            derive_seed(args.common.seed, size, k))
                          .aggregate;
            const double actual = accuracy_from_sums(sums).aggregate;
            out << io::format_double(predicted) << ',' << io::format_double(actual) << ','
                << size << ',' << args.network << '\n';
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// readout-only

struct ReadoutOnlyArgs {
    CommonOptions common;
    std::vector<std::string> weights;
    std::string similarity = "dot";
    double noise_db = 10.0;
    std::string db_grid;
    int reps = 50;
    int experiments = 10;
};

int run_readout_only(const ReadoutOnlyArgs& args) {
    if (args.weights.empty()) throw std::invalid_argument("need at least one --weights");
    std::vector<ReadoutPerceptron> readouts;
    for (const auto& path : args.weights)
        readouts.push_back(load_readout(path, "", parse_similarity(args.similarity)));

    if (args.db_grid.empty()) {
        // single-level mode: one JSON report per readout
        json report = base_report(args.common.seed);
        report["noise_db"] = args.noise_db;
        report["reps"] = args.reps;
        json entries = json::array();
        for (std::size_t k = 0; k < readouts.size(); ++k) {
            const PredictionReport pred = analysis::readout_only_predict(
                readouts[k], args.noise_db, args.reps, derive_seed(args.common.seed, k));
            json entry;
            entry["weights"] = args.weights[k];
            entry["per_class"] = vector_to_json(pred.per_class);
            entry["aggregate"] = pred.aggregate;
            entries.push_back(std::move(entry));
        }
        report["readouts"] = std::move(entries);
        emit_json(args.common, report);
        return 0;
    }

    const std::vector<double> grid = parse_double_list(args.db_grid);
    const analysis::NoiseSweepResult sweep = analysis::noise_sweep(
        readouts, grid, args.reps, args.experiments, args.common.seed);
    Sink sink(args.common.out);
    std::ostream& out = sink.stream();
    write_provenance(out, args.common.seed,
                     {sweep.selected_db
                          ? "selected_db: " + io::format_double(*sweep.selected_db)
                          : std::string("selected_db: undefined")});
    out << "db,mean_pred_std\n";
    for (const auto& p : sweep.points)
        out << io::format_double(p.db) << ',' << io::format_double(p.mean_std) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
    CommonOptions common;
    std::string mu_grid;
    std::string sigma_grid;
    std::string rho_grid;
    long samples = 1000000;
};

int run_synth(const SynthArgs& args) {
    const std::vector<double> mu =
        args.mu_grid.empty() ? synth::default_mu_grid() : parse_double_list(args.mu_grid);
    const std::vector<double> sigma = args.sigma_grid.empty()
                                          ? synth::default_sigma_grid()
                                          : parse_double_list(args.sigma_grid);
    const std::vector<double> rho =
        args.rho_grid.empty() ? synth::default_rho_grid() : parse_double_list(args.rho_grid);
    const auto rows = synth::sweep_surface(mu, sigma, rho, args.samples, args.common.seed,
                                           resolve_threads(args.common.threads));
    Sink sink(args.common.out);
    std::ostream& out = sink.stream();
    write_provenance(out, args.common.seed);
    out << "mu,sigma,rho,eq2,closed_form,empirical,stderr\n";
    for (const auto& r : rows)
        out << io::format_double(r.mu) << ',' << io::format_double(r.sigma) << ','
            << io::format_double(r.rho) << ',' << io::format_double(r.eq2) << ','
            << io::format_double(r.closed_form) << ',' << io::format_double(r.empirical)
            << ',' << io::format_double(r.stderr_) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsArgs {
    CommonOptions common;
    std::string input;
    std::string x_col = "predicted";
    std::string y_col = "actual";
};

int run_metrics(const MetricsArgs& args) {
    const io::Table table = io::read_table(args.input);
    const std::vector<double> xs = io::numeric_column(table, args.x_col);
    const std::vector<double> ys = io::numeric_column(table, args.y_col);
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) pairs.emplace_back(xs[k], ys[k]);
    const analysis::BiasLine line = analysis::fit_bias_line(pairs);
    json report = base_report(args.common.seed);
    report["input"] = args.input;
    report["n"] = xs.size();
    report["pearson"] = analysis::pearson(xs, ys);
    report["kendall_tau"] = analysis::kendall_tau(xs, ys);
    report["bias_slope"] = line.slope;
    report["bias_intercept"] = line.intercept;
    emit_json(args.common, report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    g_command_line = quote_command_line(argc, argv);
    CLI::App app{"Accuracy prediction for dense readout layers from postsynaptic-sum "
                 "statistics"};
    app.require_subcommand(1);

    PredictArgs predict_args;
    CLI::App* predict = app.add_subcommand(
        "predict", "Predict accuracy from activation and weight files");
    predict->add_option("--activations", predict_args.activations,
                        "Labeled activations CSV (label,v1,...,vN)")
        ->required();
    predict->add_option("--weights", predict_args.weights, "Readout matrix CSV (DxN)")
        ->required();
    predict->add_option("--bias", predict_args.bias, "Optional bias matrix CSV (1xD)");
    predict->add_option("--similarity", predict_args.similarity, "dot|cosine")
        ->capture_default_str();
    predict->add_option("--method", predict_args.method, "eq1|eq2|eq3-mc|kde")
        ->capture_default_str();
    predict->add_option("--priors", predict_args.priors, "empirical|uniform")
        ->capture_default_str();
    predict->add_option("--mc-samples", predict_args.mc_samples, "Monte Carlo draws")
        ->capture_default_str();
    predict->add_option("--bandwidth", predict_args.bandwidth,
                        "KDE bandwidth (<= 0 selects Silverman's rule)");
    predict->add_flag("--empirical", predict_args.with_empirical,
                      "Also report winner-take-all accuracy on the inputs");
    add_common(predict, predict_args.common);

    EsnArgs esn_args;
    CLI::App* esn_cmd = app.add_subcommand(
        "esn", "Sequence-recall experiment with codebook or regression readouts");
    esn_cmd->add_option("--n", esn_args.n, "Hidden dimension")->capture_default_str();
    esn_cmd->add_option("--d", esn_args.d, "Alphabet size")->capture_default_str();
    esn_cmd->add_option("--kappa", esn_args.kappa, "Clipping threshold")
        ->capture_default_str();
    esn_cmd->add_option("--delays", esn_args.delays, "Delays, e.g. 0..10 or 0,5,10")
        ->capture_default_str();
    esn_cmd->add_option("--seeds", esn_args.seeds, "Number of simulations to average")
        ->capture_default_str();
    esn_cmd->add_option("--train-len", esn_args.train_len, "Training sequence length")
        ->capture_default_str();
    esn_cmd->add_option("--test-len", esn_args.test_len, "Test sequence length")
        ->capture_default_str();
    esn_cmd->add_option("--readout", esn_args.readout, "codebook|regression")
        ->capture_default_str();
    esn_cmd->add_option("--lambda", esn_args.lambda, "Ridge penalty (regression readout)")
        ->capture_default_str();
    esn_cmd->add_option("--similarity", esn_args.similarity, "cosine|dot")
        ->capture_default_str();
    esn_cmd->add_option("--amplitudes", esn_args.amplitudes,
                        "Per-symbol input gains, e.g. 1.0,0.7,0.4");
    esn_cmd->add_option("--mc-samples", esn_args.mc_samples, "Monte Carlo draws per class")
        ->capture_default_str();
    add_common(esn_cmd, esn_args.common);

    RvflArgs rvfl_args;
    CLI::App* rvfl = app.add_subcommand(
        "rvfl", "Shallow random-network cross-validation and grid search");
    rvfl->add_option("--data", rvfl_args.data, "Dataset CSV (label,f1,...,fF)")->required();
    rvfl->add_option("--n", rvfl_args.n_grid, "Hidden-unit grid, e.g. 50..200 or 100,200")
        ->capture_default_str();
    rvfl->add_option("--lambda", rvfl_args.lambda_grid, "Ridge penalty grid")
        ->capture_default_str();
    rvfl->add_option("--kappa", rvfl_args.kappa_grid, "Clipping threshold grid")
        ->capture_default_str();
    rvfl->add_option("--readout", rvfl_args.readout, "centroid|ridge")
        ->capture_default_str();
    rvfl->add_option("--folds", rvfl_args.folds, "Cross-validation folds")
        ->capture_default_str();
    add_common(rvfl, rvfl_args.common);

    SubproblemArgs sub_args;
    CLI::App* subproblem = app.add_subcommand(
        "subproblem", "Predicted vs actual accuracy on random class subsets");
    subproblem->add_option("--activations", sub_args.activations, "Labeled activations CSV")
        ->required();
    subproblem->add_option("--weights", sub_args.weights, "Readout matrix CSV")->required();
    subproblem->add_option("--bias", sub_args.bias, "Optional bias matrix CSV");
    subproblem->add_option("--similarity", sub_args.similarity, "dot|cosine")
        ->capture_default_str();
    subproblem->add_option("--subproblem-sizes,--sizes", sub_args.sizes, "Subset sizes")
        ->capture_default_str();
    subproblem->add_option("--count", sub_args.count, "Subsets per size")
        ->capture_default_str();
    subproblem->add_option("--method", sub_args.method, "eq2|eq3-mc")->capture_default_str();
    subproblem->add_option("--mc-samples", sub_args.mc_samples, "Monte Carlo draws")
        ->capture_default_str();
    subproblem->add_option("--network", sub_args.network, "Label for the network column")
        ->capture_default_str();
    add_common(subproblem, sub_args.common);

    ReadoutOnlyArgs ro_args;
    CLI::App* readout_only = app.add_subcommand(
        "readout-only", "Predict accuracy from readout weights alone via noisy surrogates");
    readout_only->add_option("--weights", ro_args.weights, "Readout matrix CSV (repeatable)")
        ->required();
    readout_only->add_option("--similarity", ro_args.similarity, "dot|cosine")
        ->capture_default_str();
    readout_only->add_option("--noise-db", ro_args.noise_db, "SNR in dB (single-level mode)")
        ->capture_default_str();
    readout_only->add_option("--db-grid", ro_args.db_grid,
                             "Noise grid in dB; enables the dispersion sweep");
    readout_only->add_option("--reps", ro_args.reps, "Surrogates per filter")
        ->capture_default_str();
    readout_only->add_option("--experiments", ro_args.experiments,
                             "Repetitions per noise level")
        ->capture_default_str();
    add_common(readout_only, ro_args.common);

    SynthArgs synth_args;
    CLI::App* synth_cmd = app.add_subcommand(
        "synth", "Correlated binary Gaussian sweep against the exact answer");
    synth_cmd->add_option("--mu-grid", synth_args.mu_grid, "Means of the correct class");
    synth_cmd->add_option("--sigma-grid", synth_args.sigma_grid, "Shared deviations");
    synth_cmd->add_option("--rho-grid", synth_args.rho_grid, "Correlations in (-1, 1)");
    synth_cmd->add_option("--samples", synth_args.samples, "Draws per grid cell")
        ->capture_default_str();
    add_common(synth_cmd, synth_args.common);

    MetricsArgs metrics_args;
    CLI::App* metrics = app.add_subcommand(
        "metrics", "Pearson, Kendall tau, and the fitted bias line of a scatter CSV");
    metrics->add_option("--in", metrics_args.input, "Input CSV")->required();
    metrics->add_option("--x", metrics_args.x_col, "Predicted column (name or index)")
        ->capture_default_str();
    metrics->add_option("--y", metrics_args.y_col, "Actual column (name or index)")
        ->capture_default_str();
    add_common(metrics, metrics_args.common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (predict->parsed()) return run_predict(predict_args);
        if (esn_cmd->parsed()) return run_esn(esn_args);
        if (rvfl->parsed()) return run_rvfl(rvfl_args);
        if (subproblem->parsed()) return run_subproblem(sub_args);
        if (readout_only->parsed()) return run_readout_only(ro_args);
        if (synth_cmd->parsed()) return run_synth(synth_args);
        if (metrics->parsed()) return run_metrics(metrics_args);
    } catch (const std::logic_error& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
