#include "cli.hpp"

#include "ttb/augmentation.hpp"
#include "ttb/data.hpp"
#include "ttb/errors.hpp"
#include "ttb/image_io.hpp"
#include "ttb/tensor_io.hpp"
#include "ttb/vi_engine.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

namespace ttb::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Stream k of a run seed; stream 0 is the seed itself.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) { return k == 0 ? seed : splitmix64(seed ^ (k << 56)); }

DenseTensor load_values(const std::string& path) { return is_image_path(path) ? read_image(path) : load_tensor(path); }

void save_values(const std::string& path, const DenseTensor& t) {
    if (is_image_path(path))
        write_image(path, t);
    else
        save_tensor(path, t);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw FormatError("cannot write " + path);
    f << text << '\n';
    if (!f) throw FormatError("write failed: " + path);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string json_scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw UsageError("config value must be a scalar or list: " + v.dump());
}

// Fills options that were not given on the command line from a JSON object
// whose keys are long option names ('-' or '_').
void apply_config(CLI::App& sub, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot read config " + path);
    json cfg;
    try {
        cfg = json::parse(f);
    } catch (const json::exception& e) {
        throw FormatError("config " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw FormatError("config " + path + " must be a JSON object");
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        std::string key = it.key();
        std::replace(key.begin(), key.end(), '_', '-');
        CLI::Option* opt = nullptr;
        for (CLI::Option* o : sub.get_options())
            for (const auto& name : o->get_lnames())
                if (name == key) opt = o;
        if (opt == nullptr || key == "config" || key == "help") throw UsageError("unknown config key '" + it.key() + "'");
        if (opt->count() > 0) continue;
        if (it->is_array())
            for (const auto& v : *it) opt->add_result(json_scalar(v));
        else
            opt->add_result(json_scalar(*it));
        opt->run_callback();
    }
}

std::size_t resolve_threads(const std::optional<std::size_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("TTB_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0' || v == 0) throw UsageError(std::string("TTB_THREADS must be a positive integer, got '") + env + "'");
        return static_cast<std::size_t>(v);
    }
    return 1;
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::vector<std::size_t> dims;
    std::vector<std::size_t> ranks;
    std::string image;
    std::optional<double> snr;
    std::optional<double> noise_var;
    double missing = 0.0;
    std::string mask_type = "random";
    std::size_t stripe_period = 3;
    std::size_t stripe_width = 1;
    std::optional<std::size_t> stripe_offset;
    bool stripe_rows = false;
    std::optional<std::uint64_t> seed;
    std::size_t repeat = 1;
    std::string out_dir = ".";
    std::string prefix = "synth";
    bool to_stdout = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
    if (a.image.empty() && (a.dims.empty() || a.ranks.empty()))
        throw UsageError("synth needs --dims and --ranks, or --image");
    if (a.snr && a.noise_var) throw UsageError("--snr and --noise-var are exclusive");
    if (a.repeat == 0) throw UsageError("--repeat must be at least 1");
    if (a.mask_type != "random" && a.mask_type != "stripe") throw UsageError("--mask-type must be random or stripe");

    bool generated = false;
    std::uint64_t base = 0;
    if (a.seed) {
        base = *a.seed;
    } else {
        std::random_device rd;
        base = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        generated = true;
    }

    fs::create_directories(a.out_dir);
    const std::optional<DenseTensor> image = a.image.empty() ? std::nullopt : std::optional(read_image(a.image));

    json runs = json::array();
    for (std::size_t r = 0; r < a.repeat; ++r) {
        const std::uint64_t seed = base + r;
        const std::uint64_t noise_seed = derive_seed(seed, 1), mask_seed = derive_seed(seed, 2);
        const DenseTensor truth = image ? *image : gen_synthetic({a.dims, a.ranks, seed}).truth;
        const NoisyTensor noisy = a.noise_var ? add_noise_variance(truth, *a.noise_var, noise_seed)
                                              : add_noise(truth, a.snr.value_or(kNoiselessSnr), noise_seed);
        MaskTensor mask;
        if (a.mask_type == "random") {
            mask = random_mask(truth.dims(), a.missing, mask_seed);
        } else {
            StripeSpec st;
            st.period = a.stripe_period;
            st.width = a.stripe_width;
            st.offset = a.stripe_offset;
            st.vertical = !a.stripe_rows;
            mask = stripe_mask(truth.dims(), st, mask_seed);
        }

        const std::string stem = (fs::path(a.out_dir) / (a.prefix + "_s" + std::to_string(seed))).string();
        const std::string truth_path = stem + "_truth.ttn", noisy_path = stem + "_noisy.ttn", mask_path = stem + "_mask.ttm";
        save_tensor(truth_path, truth);
        save_tensor(noisy_path, noisy.noisy);
        save_mask(mask_path, mask);

        runs.push_back({{"seed", seed},
                        {"noise_seed", noise_seed},
                        {"mask_seed", mask_seed},
                        {"realized_snr_db", finite_or_null(noisy.realized_snr_db)},
                        {"observed", mask.observed_count()},
                        {"files", {{"truth", truth_path}, {"noisy", noisy_path}, {"mask", mask_path}}}});
        err << "synth: seed " << seed << " -> " << stem << "_*\n";
    }

    json cfg{{"missing", a.missing}, {"mask_type", a.mask_type}, {"repeat", a.repeat}};
    if (image) {
        cfg["image"] = a.image;
    } else {
        cfg["dims"] = a.dims;
        cfg["ranks"] = a.ranks;
    }
    if (a.noise_var)
        cfg["noise_var"] = *a.noise_var;
    else
        cfg["snr"] = finite_or_null(a.snr.value_or(kNoiselessSnr));
    if (a.mask_type == "stripe") {
        cfg["stripe_period"] = a.stripe_period;
        cfg["stripe_width"] = a.stripe_width;
        cfg["stripe_rows"] = a.stripe_rows;
        if (a.stripe_offset) cfg["stripe_offset"] = *a.stripe_offset;
    }
    const json manifest{{"command", "synth"}, {"seed", base}, {"seed_generated", generated}, {"config", cfg}, {"runs", runs}};
    const std::string manifest_path = (fs::path(a.out_dir) / (a.prefix + "_manifest.json")).string();
    write_text(manifest_path, manifest.dump(2));
    if (a.to_stdout) out << manifest.dump(2) << '\n';
    return kExitConverged;
}

// ---------------------------------------------------------------- complete

struct CompleteArgs {
    std::string input;
    std::string mask;
    std::string plan;
    std::string truth;
    std::string output;
    std::string report;
    std::string csv;
    std::string save_state;
    std::string resume;
    bool to_stdout = false;

    std::size_t max_iters = 100;
    double rel_tol = 1e-6;
    double prune_ratio = 100.0;
    double fast_path_fraction = 0.9;
    std::uint64_t seed = 0;
    std::size_t rank_cap = 15;
    std::optional<double> svd_tol;
    std::optional<double> init_variance;
    std::optional<std::size_t> threads;

    double lambda_alpha = 1e-6;
    double lambda_beta = 1e-6;
    double tau_alpha = 1e-6;
    double tau_beta = 1e-6;
};

int cmd_complete(const CompleteArgs& a, std::ostream& out, std::ostream& err) {
    require(a.input, "--input");
    const DenseTensor values = load_values(a.input);
    const MaskTensor mask = a.mask.empty() ? MaskTensor(values.dims(), true) : load_mask(a.mask);
    if (mask.dims() != values.dims()) throw ShapeError("mask dims do not match the input");

    std::optional<AugmentPlan> plan;
    if (!a.plan.empty()) plan = load_plan(a.plan);
    const DenseTensor fit_values = plan ? augment(values, *plan) : values;
    const MaskTensor fit_mask = plan ? augment_mask(mask, *plan) : mask;

    FitOptions opts;
    opts.max_iters = a.max_iters;
    opts.rel_tol = a.rel_tol;
    opts.prune_ratio = a.prune_ratio;
    opts.fast_path_observed_fraction = a.fast_path_fraction;
    opts.seed = a.seed;
    opts.rank_cap_multiplier = a.rank_cap;
    opts.svd_rel_tol = a.svd_tol;
    opts.relative_init_variance = a.init_variance;
    opts.threads = resolve_threads(a.threads);

    PriorHyper prior;
    prior.default_alpha = a.lambda_alpha;
    prior.default_beta = a.lambda_beta;
    prior.alpha_tau = a.tau_alpha;
    prior.beta_tau = a.tau_beta;

    std::ofstream csv;
    if (!a.csv.empty()) {
        csv.open(a.csv);
        if (!csv) throw FormatError("cannot write " + a.csv);
        csv << kIterationCsvHeader << '\n';
        opts.on_iteration = [&csv](const IterationRecord& rec) { csv << iteration_csv_row(rec) << '\n' << std::flush; };
    }

    FitResult res;
    if (a.resume.empty()) {
        res = fit(fit_values, fit_mask, prior, opts);
    } else {
        res.state = load_model_state(a.resume);
        if (res.state.dims() != fit_values.dims()) throw ShapeError("checkpoint dims do not match the input");
        res.report = run_sweeps(res.state, fit_values, fit_mask, opts);
    }

    DenseTensor estimate = reconstruct(res.state);
    if (plan) estimate = deaugment(estimate, *plan);
    if (!a.output.empty()) save_values(a.output, estimate);
    if (!a.save_state.empty()) save_model_state(a.save_state, res.state);

    json report = json::parse(fit_report_json(res.report));
    report["final_ranks"] = res.state.ranks;
    report["fit_dims"] = fit_values.dims();
    report["observed"] = fit_mask.observed_count();
    json cfg{{"input", a.input},
             {"max_iters", a.max_iters},
             {"rel_tol", a.rel_tol},
             {"prune_ratio", a.prune_ratio},
             {"fast_path_fraction", a.fast_path_fraction},
             {"seed", a.seed},
             {"rank_cap", a.rank_cap},
             {"threads", opts.threads},
             {"lambda_alpha", a.lambda_alpha},
             {"lambda_beta", a.lambda_beta},
             {"tau_alpha", a.tau_alpha},
             {"tau_beta", a.tau_beta}};
    if (!a.mask.empty()) cfg["mask"] = a.mask;
    if (!a.plan.empty()) cfg["plan"] = a.plan;
    if (!a.resume.empty()) cfg["resume"] = a.resume;
    if (a.svd_tol) cfg["svd_tol"] = *a.svd_tol;
    if (a.init_variance) cfg["init_variance"] = *a.init_variance;
    report["config"] = cfg;
    if (!a.truth.empty()) report["metrics"] = json::parse(metrics_json(compute_metrics(load_values(a.truth), estimate)));

    const std::string text = report.dump(2);
    if (!a.report.empty()) write_text(a.report, text);
    if (a.to_stdout) out << text << '\n';

    err << "complete: " << to_string(res.report.status) << " after " << res.report.iterations << " iterations, ranks [";
    for (std::size_t i = 0; i < res.state.ranks.size(); ++i) err << (i ? "," : "") << res.state.ranks[i];
    err << "]\n";
    if (!res.report.message.empty()) err << "complete: " << res.report.message << '\n';

    switch (res.report.status) {
        case FitStatus::converged: return kExitConverged;
        case FitStatus::max_iters: return kExitMaxIters;
        case FitStatus::failed: break;
    }
    return kExitFailure;
}

// ---------------------------------------------------------------- metrics

struct MetricsArgs {
    std::string truth;
    std::string estimate;
    std::string output;
    bool to_stdout = false;
};

int cmd_metrics(const MetricsArgs& a, std::ostream& out) {
    require(a.truth, "--truth");
    require(a.estimate, "--estimate");
    const std::string text = metrics_json(compute_metrics(load_values(a.truth), load_values(a.estimate)));
    if (!a.output.empty()) write_text(a.output, text);
    if (a.to_stdout || a.output.empty()) out << text << '\n';
    return kExitConverged;
}

// ---------------------------------------------------------- augment / deaugment

struct AugmentArgs {
    std::string input;
    std::string plan;
    std::string output;
    std::string mask;
    std::string mask_output;
};

int cmd_augment(const AugmentArgs& a) {
    require(a.input, "--input");
    require(a.plan, "--plan");
    require(a.output, "--output");
    const AugmentPlan plan = load_plan(a.plan);
    save_tensor(a.output, augment(load_values(a.input), plan));
    if (!a.mask.empty()) {
        require(a.mask_output, "--mask-output");
        save_mask(a.mask_output, augment_mask(load_mask(a.mask), plan));
    }
    return kExitConverged;
}

int cmd_deaugment(const AugmentArgs& a) {
    require(a.input, "--input");
    require(a.plan, "--plan");
    require(a.output, "--output");
    save_values(a.output, deaugment(load_tensor(a.input), load_plan(a.plan)));
    return kExitConverged;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bayesian tensor-train completion with automatic rank determination", "ttb"};
    app.require_subcommand(1);

    std::string config;
    auto add_config = [&config](CLI::App* sub) {
        sub->add_option("--config", config, "JSON file of option values; command-line flags take precedence");
    };

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth", "Generate ground truth, noisy observation and mask files");
    synth->add_option("--dims", sa.dims, "Tensor dimensions, e.g. 20,20,20")->delimiter(',');
    synth->add_option("--ranks", sa.ranks, "TT ranks with unit ends, e.g. 1,5,5,1")->delimiter(',');
    synth->add_option("--image", sa.image, "Use a PGM/PPM image as ground truth instead of a random TT");
    synth->add_option("--snr", sa.snr, "Signal-to-noise ratio in dB (default: noiseless)");
    synth->add_option("--noise-var", sa.noise_var, "Add N(0, var) noise instead of a fixed SNR")->check(CLI::NonNegativeNumber);
    synth->add_option("--missing", sa.missing, "Missing rate of the random mask")->check(CLI::Range(0.0, 1.0));
    synth->add_option("--mask-type", sa.mask_type, "random or stripe");
    synth->add_option("--stripe-period", sa.stripe_period, "Stripe period")->check(CLI::PositiveNumber);
    synth->add_option("--stripe-width", sa.stripe_width, "Stripe width")->check(CLI::PositiveNumber);
    synth->add_option("--stripe-offset", sa.stripe_offset, "First stripe position (default: from the seed)");
    synth->add_flag("--stripe-rows", sa.stripe_rows, "Remove rows instead of columns");
    synth->add_option("--seed", sa.seed, "Base seed; generated and recorded when omitted");
    synth->add_option("--repeat", sa.repeat, "Number of runs with seeds seed, seed+1, ...");
    synth->add_option("--out-dir", sa.out_dir, "Output directory");
    synth->add_option("--prefix", sa.prefix, "File name prefix");
    synth->add_flag("--stdout", sa.to_stdout, "Print the manifest on stdout");
    add_config(synth);

    CompleteArgs ca;
    CLI::App* complete = app.add_subcommand("complete", "Fit the model to an incomplete tensor or image");
    complete->add_option("--input", ca.input, "Observed tensor (.ttn) or image (.pgm/.ppm)");
    complete->add_option("--mask", ca.mask, "Observation mask (.ttm); default all observed");
    complete->add_option("--plan", ca.plan, "Augmentation plan JSON; the input is folded before the fit");
    complete->add_option("--truth", ca.truth, "Ground truth for metrics in the report");
    complete->add_option("--output", ca.output, "Reconstruction (.ttn or image)");
    complete->add_option("--report", ca.report, "Fit report JSON");
    complete->add_option("--csv", ca.csv, "Per-iteration CSV log");
    complete->add_option("--save-state", ca.save_state, "Write the final variational state");
    complete->add_option("--resume", ca.resume, "Continue from a saved state");
    complete->add_flag("--stdout", ca.to_stdout, "Print the report on stdout");
    complete->add_option("--max-iters", ca.max_iters, "Maximum sweeps")->check(CLI::PositiveNumber);
    complete->add_option("--rel-tol", ca.rel_tol, "Relative-change stopping tolerance")->check(CLI::PositiveNumber);
    complete->add_option("--prune-ratio", ca.prune_ratio, "Prune slices with E[lambda] above ratio * min");
    complete->add_option("--fast-path-fraction", ca.fast_path_fraction, "Observed fraction enabling the subtractive path")
        ->check(CLI::Range(0.0, 1.0));
    complete->add_option("--seed", ca.seed, "Seed of the initial fill of missing entries");
    complete->add_option("--rank-cap", ca.rank_cap, "Initial rank cap multiplier")->check(CLI::PositiveNumber);
    complete->add_option("--svd-tol", ca.svd_tol, "Relative tolerance of the initial unfolding ranks");
    complete->add_option("--init-variance", ca.init_variance, "Initial variances relative to the core energy");
    complete->add_option("--threads", ca.threads, "Worker threads (default: TTB_THREADS or 1)")->check(CLI::PositiveNumber);
    complete->add_option("--lambda-alpha", ca.lambda_alpha, "Gamma shape of the lambda prior");
    complete->add_option("--lambda-beta", ca.lambda_beta, "Gamma rate of the lambda prior");
    complete->add_option("--tau-alpha", ca.tau_alpha, "Gamma shape of the noise precision prior");
    complete->add_option("--tau-beta", ca.tau_beta, "Gamma rate of the noise precision prior");
    add_config(complete);

    MetricsArgs ma;
    CLI::App* metrics = app.add_subcommand("metrics", "RSE, PSNR, SSIM and per-band means between two tensors");
    metrics->add_option("--truth", ma.truth, "Reference tensor or image");
    metrics->add_option("--estimate", ma.estimate, "Estimated tensor or image");
    metrics->add_option("--output", ma.output, "Write the JSON report here");
    metrics->add_flag("--stdout", ma.to_stdout, "Print the report on stdout even with --output");
    add_config(metrics);

    AugmentArgs aa;
    CLI::App* aug = app.add_subcommand("augment", "Fold an image into a higher-order tensor");
    aug->add_option("--input", aa.input, "Image (.pgm/.ppm) or image-shaped tensor (.ttn)");
    aug->add_option("--plan", aa.plan, "Augmentation plan JSON");
    aug->add_option("--output", aa.output, "Augmented tensor (.ttn)");
    aug->add_option("--mask", aa.mask, "Image-shaped mask (.ttm) to fold alongside");
    aug->add_option("--mask-output", aa.mask_output, "Folded mask (.ttm)");
    add_config(aug);

    AugmentArgs da;
    CLI::App* deaug = app.add_subcommand("deaugment", "Unfold an augmented tensor back into an image");
    deaug->add_option("--input", da.input, "Augmented tensor (.ttn)");
    deaug->add_option("--plan", da.plan, "Augmentation plan JSON");
    deaug->add_option("--output", da.output, "Image (.pgm/.ppm) or tensor (.ttn)");
    add_config(deaug);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error: " << e.what() << "\nRun with --help for usage.\n";
        return kExitFailure;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        if (!config.empty()) apply_config(*sub, config);
        if (sub == synth) return cmd_synth(sa, out, err);
        if (sub == complete) return cmd_complete(ca, out, err);
        if (sub == metrics) return cmd_metrics(ma, out);
        if (sub == aug) return cmd_augment(aa);
        return cmd_deaugment(da);
    } catch (const CLI::Error& e) {
        err << "error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return kExitFailure;
}

}  // namespace ttb::cli
