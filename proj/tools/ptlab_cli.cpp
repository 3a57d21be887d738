// Command-line front end: dataset loading, single runs, multi-seed
// benchmarks, noise sweeps, SBM generation, and the numerical verification
// suite. Results are emitted as line-delimited JSON (one run per line)
// followed by a summary object; --csv adds a flat table for plotting.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptlab/ptlab.hpp"

namespace fs = std::filesystem;
using namespace ptlab;

namespace {

struct CommonOpts {
    std::string dataset_dir;
    std::vector<std::string> modes;
    Real alpha = 0.1;
    Index k_steps = 10;
    Real epsilon = 100.0;
    Real lambda1 = 0.05;
    Real lambda2 = 0.005;
    Real lr = 0.1;
    Index hidden = 64;
    Real dropout = -1.0;  // < 0: per-mode default (0.5 for the dgcn family)
    Index per_class = 20;
    Index early_stop_size = 500;
    Index runs = 20;
    Index max_epochs = 1000;
    Index patience = 100;
    std::uint64_t seed = 0;
    std::string out_path;
    std::string csv_path;
    std::string normalization = "sym-selfloop";
    bool deterministic = false;
    bool no_clamp = false;
    Index workers = 1;
};

void add_common_options(CLI::App* cmd, CommonOpts& o, bool needs_dataset) {
    auto* ds = cmd->add_option("--dataset", o.dataset_dir, "dataset bundle directory");
    if (needs_dataset) ds->check(CLI::ExistingDirectory);
    cmd->add_option("--mode", o.modes,
                    "training mode(s): pts|ptd|pta|pta-fast|dgcn|dgcn-noe|dgcn-uniform|mlp");
    cmd->add_option("--alpha", o.alpha, "PPR teleport probability");
    cmd->add_option("--k", o.k_steps, "propagation steps K");
    cmd->add_option("--epsilon", o.epsilon, "gamma temperature");
    cmd->add_option("--lambda1", o.lambda1, "data-loss weight");
    cmd->add_option("--lambda2", o.lambda2, "W1 L2 weight");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--hidden", o.hidden, "hidden units");
    cmd->add_option("--dropout", o.dropout, "dropout rate (default: 0, dgcn family 0.5)");
    cmd->add_option("--per-class", o.per_class, "training nodes per class");
    cmd->add_option("--early-stop-size", o.early_stop_size, "early-stopping set size");
    cmd->add_option("--runs", o.runs, "number of (split, init) seeds");
    cmd->add_option("--max-epochs", o.max_epochs, "epoch cap");
    cmd->add_option("--patience", o.patience, "early-stopping patience");
    cmd->add_option("--seed", o.seed, "base seed");
    cmd->add_option("--out", o.out_path, "write JSON lines here instead of stdout");
    cmd->add_option("--csv", o.csv_path, "also write runs as CSV");
    cmd->add_option("--normalization", o.normalization, "sym-selfloop|sym|row")
        ->check(CLI::IsMember({"sym-selfloop", "sym", "row"}));
    cmd->add_option("--workers", o.workers, "parallel runs (each run single-threaded)");
    cmd->add_flag("--deterministic", o.deterministic, "force serial execution");
    cmd->add_flag("--no-clamp", o.no_clamp, "do not clamp labeled rows during label propagation");
}

NormalizationStrategy parse_normalization(const std::string& s) {
    if (s == "sym-selfloop") return NormalizationStrategy::sym_selfloop;
    if (s == "sym") return NormalizationStrategy::sym;
    return NormalizationStrategy::row;
}

TrainConfig make_train_config(const CommonOpts& o) {
    TrainConfig cfg;
    cfg.lambda1 = o.lambda1;
    cfg.lambda2 = o.lambda2;
    cfg.lr = o.lr;
    cfg.epsilon = o.epsilon;
    cfg.max_epochs = o.max_epochs;
    cfg.patience = std::min(o.patience, o.max_epochs);
    cfg.prop.alpha = o.alpha;
    cfg.prop.k_steps = o.k_steps;
    cfg.prop.clamp_labeled = !o.no_clamp;
    cfg.normalization = parse_normalization(o.normalization);
    cfg.seed = o.seed;
    return cfg;
}

MLPConfig make_mlp_config(const CommonOpts& o) {
    MLPConfig mlp;
    mlp.hidden = o.hidden;
    return mlp;
}

BenchOptions make_bench_options(const CommonOpts& o) {
    BenchOptions opt;
    opt.n_runs = o.runs;
    opt.base_seed = o.seed;
    opt.per_class = o.per_class;
    opt.early_stop_size = o.early_stop_size;
    opt.workers = o.deterministic ? 1 : std::max<Index>(1, o.workers);
    if (o.dropout >= 0.0) opt.dropout_override = o.dropout;
    return opt;
}

std::vector<TrainMode> parse_modes(const CommonOpts& o, const char* fallback) {
    std::vector<std::string> names = o.modes.empty() ? std::vector<std::string>{fallback} : o.modes;
    std::vector<TrainMode> modes;
    for (const auto& name : names) modes.push_back(train_mode_from_string(name));
    return modes;
}

/// stdout by default, a file when --out was given
struct Sink {
    std::ofstream file;
    bool to_file = false;
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw std::runtime_error("cannot open output file " + path);
            to_file = true;
        }
    }
    std::ostream& stream() { return to_file ? file : std::cout; }
};

void write_csv(const std::string& path, const std::vector<RunResult>& runs) {
    if (path.empty()) return;
    std::ofstream out(path);
    out << "mode,dataset,seed,split_seed,noise_rate,test_accuracy,early_stop_accuracy,epochs,"
           "diverged,per_epoch_ms,total_s,prep_s\n";
    out.precision(12);
    for (const auto& r : runs) {
        out << r.mode << ',' << r.dataset << ',' << r.seed << ',' << r.split_seed << ',';
        if (r.noise_rate)
            out << *r.noise_rate;
        out << ',' << r.test_accuracy << ',' << r.early_stop_accuracy << ',' << r.epochs << ','
            << (r.diverged ? 1 : 0) << ',' << r.per_epoch_ms << ',' << r.total_s << ',' << r.prep_s
            << '\n';
    }
}

std::string dataset_name_of(const std::string& dir) {
    auto p = fs::path(dir);
    return p.filename().empty() ? p.parent_path().filename().string() : p.filename().string();
}

int cmd_verify(const CommonOpts& o, Index trials, std::optional<Real> tol) {
    Sink sink(o.out_path);
    auto reports = run_verifications(o.seed, trials, tol);
    bool all_passed = true;
    for (const auto& rep : reports) {
        sink.stream() << rep.to_json().dump() << "\n";
        all_passed = all_passed && rep.passed;
    }
    return all_passed ? 0 : 1;
}

int cmd_train(const CommonOpts& o) {
    Dataset ds = load_dataset(o.dataset_dir);
    TrainMode mode = parse_modes(o, "pta").at(0);
    MLPConfig mlp = make_mlp_config(o);
    mlp.dropout = o.dropout >= 0.0 ? o.dropout : default_dropout(mode);
    RunResult rr = run_single(ds, dataset_name_of(o.dataset_dir), mode, o.seed, o.seed,
                              make_train_config(o), mlp, o.per_class, o.early_stop_size);
    Sink sink(o.out_path);
    sink.stream() << rr.to_json().dump() << "\n";
    write_csv(o.csv_path, {rr});
    return rr.diverged ? 1 : 0;
}

int cmd_bench(const CommonOpts& o) {
    Dataset ds = load_dataset(o.dataset_dir);
    auto modes = parse_modes(o, "pta");
    auto out = run_benchmark(ds, dataset_name_of(o.dataset_dir), modes, make_train_config(o),
                             make_mlp_config(o), make_bench_options(o));
    Sink sink(o.out_path);
    for (const auto& rr : out.runs) sink.stream() << rr.to_json().dump() << "\n";
    sink.stream() << out.summary_json().dump() << "\n";
    write_csv(o.csv_path, out.runs);
    return 0;
}

int cmd_noise(const CommonOpts& o, const std::string& kind_name, std::vector<Real> rates,
              const std::string& dump_dir) {
    Dataset ds = load_dataset(o.dataset_dir);
    const NoiseKind kind = (kind_name == "label") ? NoiseKind::label : NoiseKind::structure;
    std::sort(rates.begin(), rates.end());
    if (!dump_dir.empty() && kind == NoiseKind::structure) {
        // re-serialize each corrupted graph for inspection
        for (std::size_t i = 0; i < rates.size(); ++i) {
            NoiseSpec spec{NoiseKind::structure, rates[i], mix_seed(mix_seed(o.seed, 0x4015e), i)};
            save_dataset(inject_structure_noise(ds, spec),
                         fs::path(dump_dir) / ("rate_" + std::to_string(rates[i])));
        }
    }
    auto modes = parse_modes(o, "pta");
    auto sweep = run_noise_sweep(ds, dataset_name_of(o.dataset_dir), kind, rates, modes,
                                 make_train_config(o), make_mlp_config(o), make_bench_options(o),
                                 mix_seed(o.seed, 0x4015e));
    Sink sink(o.out_path);
    std::vector<RunResult> all_runs;
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < sweep.rates.size(); ++i) {
        for (const auto& rr : sweep.per_rate[i].runs) {
            sink.stream() << rr.to_json().dump() << "\n";
            all_runs.push_back(rr);
        }
        nlohmann::ordered_json entry;
        entry["noise_rate"] = sweep.rates[i];
        entry["summary"] = sweep.per_rate[i].summary_json();
        summary.push_back(entry);
    }
    nlohmann::ordered_json top;
    top["kind"] = kind_name;
    top["sweep"] = summary;
    sink.stream() << top.dump() << "\n";
    write_csv(o.csv_path, all_runs);
    return 0;
}

int cmd_sbm(const SbmSpec& spec, const std::string& out_dir) {
    Dataset ds = generate_sbm(spec);
    save_dataset(ds, out_dir);
    nlohmann::ordered_json j;
    j["out"] = out_dir;
    j["nodes"] = ds.n;
    j["edges"] = ds.adjacency.nnz() / 2;
    j["structure_noise"] = ds.adjacency.nnz() > 0 ? measure_structure_noise(ds) : 0.0;
    std::cout << j.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"propagation-then-training toolkit for semi-supervised node classification"};
    app.require_subcommand(1);

    CommonOpts verify_o, train_o, bench_o, noise_o;
    Index verify_trials = 50;
    Real verify_tol = -1.0;

    auto* verify = app.add_subcommand("verify", "run the numerical equivalence checks");
    add_common_options(verify, verify_o, false);
    verify->add_option("--trials", verify_trials, "instances per check");
    verify->add_option("--tol", verify_tol, "override every check tolerance");

    auto* train = app.add_subcommand("train", "train one model and report its accuracy");
    add_common_options(train, train_o, true);
    train->get_option("--dataset")->required();

    auto* bench = app.add_subcommand("bench", "multi-seed benchmark with bootstrap CIs");
    add_common_options(bench, bench_o, true);
    bench->get_option("--dataset")->required();

    auto* noise = app.add_subcommand("noise", "robustness sweep over corruption rates");
    std::string noise_kind = "structure";
    std::string noise_dump;
    std::vector<Real> noise_rates;
    add_common_options(noise, noise_o, true);
    noise->get_option("--dataset")->required();
    noise->add_option("--kind", noise_kind, "structure|label")
        ->check(CLI::IsMember({"structure", "label"}));
    noise->add_option("--rates", noise_rates, "target corruption rates")->required();
    noise->add_option("--dump-corrupted", noise_dump,
                      "write each corrupted structure bundle under this directory");

    auto* sbm = app.add_subcommand("sbm", "generate a stochastic-block-model bundle");
    SbmSpec sbm_spec;
    std::string sbm_out;
    sbm->add_option("--out", sbm_out, "bundle directory to create")->required();
    sbm->add_option("--nodes", sbm_spec.n, "node count");
    sbm->add_option("--classes", sbm_spec.classes, "class count");
    sbm->add_option("--p-intra", sbm_spec.p_intra, "within-class edge probability");
    sbm->add_option("--p-inter", sbm_spec.p_inter, "between-class edge probability");
    sbm->add_option("--feature-dim", sbm_spec.feature_dim, "feature dimension");
    sbm->add_option("--class-sep", sbm_spec.class_separation, "class mean separation");
    sbm->add_option("--seed", sbm_spec.seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed())
            return cmd_verify(verify_o, verify_trials,
                              verify_tol >= 0.0 ? std::optional<Real>(verify_tol) : std::nullopt);
        if (train->parsed()) return cmd_train(train_o);
        if (bench->parsed()) return cmd_bench(bench_o);
        if (noise->parsed()) return cmd_noise(noise_o, noise_kind, noise_rates, noise_dump);
        if (sbm->parsed()) return cmd_sbm(sbm_spec, sbm_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
