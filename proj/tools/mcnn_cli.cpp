// Command-line front end: ingest GPS stop events, generate synthetic routes,
// train and tune the masked-convolution ETA model, benchmark it against
// baselines, and serve live trip predictions over a JSON-lines protocol.

#include <atomic>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <CLI11.hpp>

#include "mcnn/benchmark.hpp"
#include "mcnn/checkpoint.hpp"
#include "mcnn/day_matrix.hpp"
#include "mcnn/serve.hpp"
#include "mcnn/session.hpp"
#include "mcnn/stop_events.hpp"
#include "mcnn/synthetic.hpp"
#include "mcnn/train.hpp"
#include "mcnn/tune.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    const std::uint64_t generated =
        (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
    std::cerr << "seed: " << generated << " (generated; pass --seed to reproduce)\n";
    return generated;
}

std::string matrix_file_name(const mcnn::DayMatrix& day) {
    return day.route_id + "__" + day.service_date + ".csv";
}

std::vector<mcnn::DayMatrix> load_day_matrices(const std::string& path) {
    std::vector<fs::path> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.path().extension() == ".csv") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else if (fs::exists(path)) {
        files.push_back(path);
    } else {
        throw mcnn::IoError("matrices path does not exist: " + path);
    }
    if (files.empty()) throw mcnn::IoError("no .csv day matrices under " + path);

    std::vector<mcnn::DayMatrix> days;
    for (const auto& file : files) {
        const std::string stem = file.stem().string();
        const auto sep = stem.find("__");
        if (sep == std::string::npos) {
            throw mcnn::IoError("day matrix file name must be <route>__<date>.csv: " +
                                file.string());
        }
        std::ifstream in(file);
        if (!in) throw mcnn::IoError("cannot open " + file.string());
        days.push_back(mcnn::parse_day_matrix(in, stem.substr(0, sep), stem.substr(sep + 2)));
    }
    std::sort(days.begin(), days.end(),
              [](const mcnn::DayMatrix& a, const mcnn::DayMatrix& b) {
                  return std::tie(a.service_date, a.route_id) <
                         std::tie(b.service_date, b.route_id);
              });
    return days;
}

std::vector<double> parse_profile(const std::string& text, int count, const char* what) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            values.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw mcnn::ConfigError(std::string(what) + ": bad number '" + field + "'");
        }
    }
    if (values.size() == 1) values.assign(static_cast<std::size_t>(count), values[0]);
    if (values.size() != static_cast<std::size_t>(count)) {
        throw mcnn::ConfigError(std::string(what) + ": expected 1 or " + std::to_string(count) +
                                " comma-separated values");
    }
    return values;
}

// ---- subcommand option bags ----

struct IngestArgs {
    std::string events_path;
    std::string out_dir;
};

struct SynthArgs {
    std::string out_path;
    mcnn::SyntheticConfig config;
    std::string base_profile = "150";
    std::string rush_profile;
    double rush_peak = 1.4;
    std::optional<std::uint64_t> seed;
};

struct ModelArgs {
    mcnn::ModelConfig config;
    double t_max = 1024.0;
    std::string mask_a_file;
    std::string mask_b_file;

    std::optional<std::pair<mcnn::MaskSpec, mcnn::MaskSpec>> custom_masks() const {
        if (mask_a_file.empty() && mask_b_file.empty()) return std::nullopt;
        if (mask_a_file.empty() || mask_b_file.empty()) {
            throw mcnn::ConfigError("custom masks need both --mask-a-file and --mask-b-file");
        }
        return std::make_pair(mcnn::load_mask(mask_a_file), mcnn::load_mask(mask_b_file));
    }
};

struct TrainArgs {
    std::string matrices_path;
    std::string out_path = "model.mcnn";
    ModelArgs model;
    mcnn::TrainConfig config;
    std::optional<std::uint64_t> seed;
};

struct TuneArgs {
    std::string matrices_path;
    std::string boundary_date;
    std::string report_path = "tuning_report.csv";
    std::string train_best_path;
    ModelArgs model;
    mcnn::TuneGrid grid;
    mcnn::TrainConfig config;
    std::optional<std::uint64_t> seed;

    TuneArgs() { config.max_epochs = 30; }
};

struct EvalArgs {
    std::string checkpoint_path;
    std::string matrices_path;
    std::string train_matrices_path;
    std::vector<std::string> baselines = {"hist", "ar"};
    int ar_order = 5;
    std::vector<std::string> external;  // name=path
    std::string report_path = "benchmark_report.csv";
    bool no_trip_start = false;
    std::vector<int> probe;  // segment prefix [segment prefix ...]
};

struct PredictArgs {
    std::string checkpoint_path;
    std::string matrices_path;
    int trip = 0;
    int observed = 0;
    bool sample = false;
    std::optional<std::uint64_t> seed;
};

struct ServeArgs {
    std::string checkpoint_path;
    int port = -1;  // -1 = standard streams
    std::string context_path;
};

// ---- subcommand implementations ----

int cmd_ingest(const IngestArgs& args) {
    std::ifstream in(args.events_path);
    if (!in) throw mcnn::IoError("cannot open events file: " + args.events_path);
    const auto parsed = mcnn::parse_stop_events(in);
    for (const auto& r : parsed.rejected) {
        std::cerr << "rejected line " << r.line_number << ": " << r.reason << "\n";
    }
    const auto result = mcnn::ingest_events(parsed.events);
    for (const auto& r : result.rejected) std::cerr << "rejected: " << r.reason << "\n";

    fs::create_directories(args.out_dir);
    for (const auto& day : result.days) {
        const auto path = fs::path(args.out_dir) / matrix_file_name(day);
        std::ofstream out(path);
        if (!out) throw mcnn::IoError("cannot write " + path.string());
        mcnn::write_day_matrix(out, day);
    }
    std::cout << "ingested " << parsed.events.size() << " events into " << result.days.size()
              << " day matrices (" << parsed.rejected.size() + result.rejected.size()
              << " records rejected)\n";
    return kExitOk;
}

int cmd_synth(SynthArgs& args) {
    args.config.seed = resolve_seed(args.seed);
    args.config.base_profile = parse_profile(args.base_profile, args.config.segments, "--base");
    args.config.rush_multiplier =
        args.rush_profile.empty()
            ? mcnn::SyntheticConfig::two_peak_rush(args.config.trips_per_day, args.rush_peak)
            : parse_profile(args.rush_profile, args.config.trips_per_day, "--rush");
    const auto events = mcnn::generate_synthetic(args.config);
    std::ofstream out(args.out_path, std::ios::trunc);
    if (!out) throw mcnn::IoError("cannot write " + args.out_path);
    mcnn::write_stop_events(out, events);
    std::cout << "wrote " << events.size() << " events for " << args.config.days << " days to "
              << args.out_path << "\n";
    return kExitOk;
}

int cmd_train(TrainArgs& args) {
    args.config.seed = resolve_seed(args.seed);
    const auto days = load_day_matrices(args.matrices_path);
    auto& mc = args.model.config;
    mc.segments = days.front().segments;
    const auto quantizer = mcnn::Quantizer::from_classes(args.model.t_max, mc.classes);
    const auto windows = mcnn::make_windows(days, mc.window, quantizer);
    std::cout << "training on " << windows.size() << " windows from " << days.size()
              << " days\n";

    const auto result =
        mcnn::train(windows, mc, args.config, quantizer, &std::cout, args.model.custom_masks());
    mcnn::save_checkpoint(result.checkpoint, args.out_path);
    if (result.diverged) {
        std::cerr << "training diverged; last good checkpoint saved to " << args.out_path
                  << "\n";
        return kExitRuntime;
    }
    std::cout << "checkpoint saved to " << args.out_path << "\n";
    if (!result.checkpoint.history.empty()) {
        std::cout << "final val MAPE " << result.checkpoint.history.back().val_mape << "%\n";
    }
    return kExitOk;
}

int cmd_tune(TuneArgs& args) {
    args.config.seed = resolve_seed(args.seed);
    const auto days = load_day_matrices(args.matrices_path);
    auto split = mcnn::split_train_test(days, args.boundary_date);
    auto base = args.model.config;
    base.segments = split.train.front().segments;
    args.grid.t_max = args.model.t_max;

    const auto result =
        mcnn::tune_grid(args.grid, split.train, split.test, base, args.config, &std::cout);
    {
        std::ofstream out(args.report_path, std::ios::trunc);
        if (!out) throw mcnn::IoError("cannot write " + args.report_path);
        mcnn::write_tune_csv(out, result);
    }
    std::cout << "report written to " << args.report_path << "\n";
    if (!result.has_best) {
        std::cerr << "no configuration trained successfully\n";
        return kExitRuntime;
    }
    std::cout << "best: filter " << result.best.first_filter << ", mask "
              << result.best.mask_variant << ", classes " << result.best.classes << "\n";

    if (!args.train_best_path.empty()) {
        const auto quantizer =
            mcnn::Quantizer::from_classes(args.model.t_max, result.best.classes);
        const auto windows = mcnn::make_windows(split.train, result.best.window, quantizer);
        const auto trained = mcnn::train(windows, result.best, args.config, quantizer);
        mcnn::save_checkpoint(trained.checkpoint, args.train_best_path);
        std::cout << "best configuration trained and saved to " << args.train_best_path << "\n";
        if (trained.diverged) return kExitRuntime;
    }
    return kExitOk;
}

int cmd_eval(const EvalArgs& args) {
    const auto bundle =
        std::make_shared<const mcnn::ModelBundle>(mcnn::load_checkpoint(args.checkpoint_path));
    const auto test_days = load_day_matrices(args.matrices_path);

    mcnn::BaselineSet baselines;
    const bool want_hist =
        std::find(args.baselines.begin(), args.baselines.end(), "hist") != args.baselines.end();
    const bool want_ar =
        std::find(args.baselines.begin(), args.baselines.end(), "ar") != args.baselines.end();
    if (want_hist || want_ar) {
        if (args.train_matrices_path.empty()) {
            throw mcnn::ConfigError("baselines need --train-matrices to fit on");
        }
        const auto train_days = load_day_matrices(args.train_matrices_path);
        baselines.historical.emplace(train_days);
        if (want_ar) {
            baselines.ar.emplace(train_days, args.ar_order, *baselines.historical);
        }
        if (!want_hist) baselines.historical.reset();
    }
    for (const auto& spec : args.external) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            throw mcnn::ConfigError("--external expects name=path, got '" + spec + "'");
        }
        std::ifstream in(spec.substr(eq + 1));
        if (!in) throw mcnn::IoError("cannot open external predictions: " + spec.substr(eq + 1));
        baselines.external.push_back(mcnn::parse_external_predictions(in, spec.substr(0, eq)));
    }

    mcnn::BenchmarkOptions options;
    options.trip_start = !args.no_trip_start;
    if (args.probe.size() % 2 != 0) {
        throw mcnn::ConfigError("--probe expects segment/prefix pairs");
    }
    for (std::size_t i = 0; i + 1 < args.probe.size(); i += 2) {
        options.probes.push_back({args.probe[i], args.probe[i + 1]});
    }

    const auto rows = mcnn::run_benchmark(*bundle, baselines, test_days, options);
    std::ofstream out(args.report_path, std::ios::trunc);
    if (!out) throw mcnn::IoError("cannot write " + args.report_path);
    mcnn::write_benchmark_csv(out, rows);
    mcnn::write_benchmark_csv(std::cout, rows);
    return kExitOk;
}

int cmd_predict(const PredictArgs& args) {
    const auto bundle =
        std::make_shared<const mcnn::ModelBundle>(mcnn::load_checkpoint(args.checkpoint_path));
    const auto days = load_day_matrices(args.matrices_path);
    if (days.size() != 1) throw mcnn::ConfigError("predict expects exactly one day matrix file");
    const auto& day = days.front();
    if (args.trip < 0 || args.trip >= day.trips) {
        throw mcnn::ConfigError("trip index outside the day matrix");
    }
    if (args.observed < 0 || args.observed > day.segments) {
        throw mcnn::ConfigError("observed prefix outside 0..K");
    }

    std::vector<mcnn::TripObservation> context;
    for (int t = 0; t < args.trip; ++t) {
        mcnn::TripObservation obs;
        for (int k = 0; k < day.segments; ++k) {
            obs.seconds.push_back(day.is_missing(t, k) ? 0.0 : day.value(t, k));
            obs.missing.push_back(day.is_missing(t, k) ? 1 : 0);
        }
        context.push_back(std::move(obs));
    }
    const auto mode = args.sample ? mcnn::RolloutMode::Sample : mcnn::RolloutMode::Argmax;
    const std::uint64_t sample_seed = args.sample ? resolve_seed(args.seed) : 0;
    mcnn::TripSession session(bundle, std::move(context), mode, sample_seed);
    for (int k = 1; k <= args.observed; ++k) {
        if (day.is_missing(args.trip, k - 1)) {
            throw mcnn::ConfigError("requested prefix includes a missing observation at segment " +
                                    std::to_string(k));
        }
        session.observe(k, day.value(args.trip, k - 1));
    }

    nlohmann::json j;
    j["trip"] = args.trip;
    j["observed"] = args.observed;
    j["eta"] = nlohmann::json::array();
    for (const auto& p : session.predictions()) {
        j["eta"].push_back({{"segment", p.segment},
                            {"seconds", p.seconds},
                            {"arrival_offset", p.arrival_offset}});
    }
    std::cout << j.dump() << "\n";
    return kExitOk;
}

int serve_stdio(mcnn::SessionServer& server) {
    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        std::cout << server.handle_line(line) << "\n" << std::flush;
    }
    return kExitOk;
}

int serve_tcp(mcnn::SessionServer& server, int port) {
    const int listener = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listener < 0) throw mcnn::IoError("socket() failed");
    const int one = 1;
    ::setsockopt(listener, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::bind(listener, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        ::close(listener);
        throw mcnn::IoError("cannot bind port " + std::to_string(port));
    }
    if (::listen(listener, 16) != 0) {
        ::close(listener);
        throw mcnn::IoError("listen() failed");
    }
    sockaddr_in bound{};
    socklen_t bound_len = sizeof bound;
    ::getsockname(listener, reinterpret_cast<sockaddr*>(&bound), &bound_len);
    std::cerr << "listening on port " << ntohs(bound.sin_port) << "\n" << std::flush;

    std::vector<std::thread> workers;
    while (true) {
        const int client = ::accept(listener, nullptr, nullptr);
        if (client < 0) break;
        workers.emplace_back([client, &server]() {
            std::string buffered;
            char chunk[4096];
            ssize_t got;
            while ((got = ::read(client, chunk, sizeof chunk)) > 0) {
                buffered.append(chunk, static_cast<std::size_t>(got));
                std::size_t pos;
                while ((pos = buffered.find('\n')) != std::string::npos) {
                    const std::string line = buffered.substr(0, pos);
                    buffered.erase(0, pos + 1);
                    if (line.empty()) continue;
                    const std::string response = server.handle_line(line) + "\n";
                    ::write(client, response.data(), response.size());
                }
            }
            ::close(client);
        });
    }
    for (auto& w : workers) {
        if (w.joinable()) w.join();
    }
    ::close(listener);
    return kExitOk;
}

int cmd_serve(const ServeArgs& args) {
    auto bundle =
        std::make_shared<const mcnn::ModelBundle>(mcnn::load_checkpoint(args.checkpoint_path));
    std::vector<mcnn::TripObservation> context;
    if (!args.context_path.empty()) {
        const auto days = load_day_matrices(args.context_path);
        if (days.size() != 1) throw mcnn::ConfigError("--context expects one day matrix file");
        const auto& day = days.front();
        for (int t = 0; t < day.trips; ++t) {
            mcnn::TripObservation obs;
            for (int k = 0; k < day.segments; ++k) {
                obs.seconds.push_back(day.is_missing(t, k) ? 0.0 : day.value(t, k));
                obs.missing.push_back(day.is_missing(t, k) ? 1 : 0);
            }
            context.push_back(std::move(obs));
        }
    }
    mcnn::SessionServer server(bundle, std::move(context));
    if (args.port < 0) return serve_stdio(server);
    return serve_tcp(server, args.port);
}

void add_model_options(CLI::App* cmd, ModelArgs& model) {
    cmd->add_option("--filter,-F", model.config.first_filter, "first-layer filter size F");
    cmd->add_option("--inner-filter,-L", model.config.inner_filter,
                    "inner-layer filter size L");
    cmd->add_option("--channels,-N", model.config.first_channels, "first-layer filter count N");
    cmd->add_option("--inner-channels,-n", model.config.inner_channels,
                    "inner-layer filter count n");
    cmd->add_option("--depth", model.config.inner_depth, "number of mask-B layers");
    cmd->add_option("--classes,-C", model.config.classes, "softmax class count C");
    cmd->add_option("--mask", model.config.mask_variant, "mask variant 1, 2 or 3");
    cmd->add_option("--window,-H", model.config.window, "trips per training window H");
    cmd->add_option("--tmax", model.t_max, "maximum travel time in seconds");
    cmd->add_option("--mask-a-file", model.mask_a_file, "custom mask A pattern file");
    cmd->add_option("--mask-b-file", model.mask_b_file, "custom mask B pattern file");
}

void add_train_options(CLI::App* cmd, mcnn::TrainConfig& config,
                       std::optional<std::uint64_t>& seed) {
    cmd->add_option("--batch", config.batch_size, "batch size");
    cmd->add_option("--lr", config.learning_rate, "RMSprop learning rate");
    cmd->add_option("--epochs", config.max_epochs, "maximum training epochs");
    cmd->add_option("--patience", config.early_stop_patience, "early-stopping patience");
    cmd->add_option("--val-fraction", config.validation_fraction,
                    "fraction of windows held out for validation");
    cmd->add_option("--seed", seed, "random seed (generated and logged when absent)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"masked-convolution autoregressive ETA model for bus routes"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "build day matrices from a stop-event CSV");
    ingest->set_config("--config", "", "key=value config file; flags override file values");
    ingest->add_option("--events", ingest_args.events_path, "stop-event CSV path")->required();
    ingest->add_option("--out", ingest_args.out_dir, "output directory for day matrices")
        ->required();

    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic route event stream");
    synth->set_config("--config", "", "key=value config file; flags override file values");
    synth->add_option("--out", synth_args.out_path, "output events CSV path")->required();
    synth->add_option("--route", synth_args.config.route_id, "route identifier");
    synth->add_option("--segments,-K", synth_args.config.segments, "segments per trip");
    synth->add_option("--trips", synth_args.config.trips_per_day, "trips per day");
    synth->add_option("--days", synth_args.config.days, "number of service days");
    synth->add_option("--start-date", synth_args.config.start_date, "first service date");
    synth->add_option("--base", synth_args.base_profile,
                      "per-segment base seconds (single value or comma list)");
    synth->add_option("--rush", synth_args.rush_profile,
                      "per-trip-slot rush factors (comma list; default two-peak)");
    synth->add_option("--rush-peak", synth_args.rush_peak, "peak factor of the default profile");
    synth->add_option("--persistence", synth_args.config.trip_persistence,
                      "trip-to-trip congestion persistence in [0,1)");
    synth->add_option("--congestion-scale", synth_args.config.congestion_scale,
                      "congestion spread in log space");
    synth->add_option("--noise-sd", synth_args.config.noise_sd, "observation noise sd, seconds");
    synth->add_option("--missing-rate", synth_args.config.missing_rate,
                      "fraction of cells dropped in [0,1)");
    synth->add_option("--headway", synth_args.config.headway_s, "trip start spacing, seconds");
    synth->add_option("--seed", synth_args.seed, "random seed");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train a model on ingested day matrices");
    train->set_config("--config", "", "key=value config file; flags override file values");
    train->add_option("--matrices", train_args.matrices_path, "day-matrix directory or file")
        ->required();
    train->add_option("--out", train_args.out_path, "checkpoint output path");
    add_model_options(train, train_args.model);
    add_train_options(train, train_args.config, train_args.seed);

    TuneArgs tune_args;
    auto* tune = app.add_subcommand("tune", "grid-search filter size, mask variant and classes");
    tune->set_config("--config", "", "key=value config file; flags override file values");
    tune->add_option("--matrices", tune_args.matrices_path, "day-matrix directory")->required();
    tune->add_option("--boundary", tune_args.boundary_date,
                     "validation split date (train < boundary <= validation)")
        ->required();
    tune->add_option("--filters", tune_args.grid.filters, "filter sizes to try");
    tune->add_option("--masks", tune_args.grid.mask_variants, "mask variants to try");
    tune->add_option("--grid-classes", tune_args.grid.class_counts, "class counts to try");
    tune->add_option("--report", tune_args.report_path, "tuning report CSV path");
    tune->add_option("--train-best", tune_args.train_best_path,
                     "retrain the winner and save a checkpoint here");
    add_model_options(tune, tune_args.model);
    add_train_options(tune, tune_args.config, tune_args.seed);

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "benchmark a checkpoint against baselines");
    eval->set_config("--config", "", "key=value config file; flags override file values");
    eval->add_option("--checkpoint", eval_args.checkpoint_path, "trained checkpoint")
        ->required();
    eval->add_option("--matrices", eval_args.matrices_path, "test day-matrix directory")
        ->required();
    eval->add_option("--train-matrices", eval_args.train_matrices_path,
                     "training day matrices for fitting the baselines");
    eval->add_option("--baselines", eval_args.baselines,
                     "baselines to include: hist, ar, none");
    eval->add_option("--ar-order", eval_args.ar_order, "AR baseline order p");
    eval->add_option("--external", eval_args.external,
                     "external prediction CSV as name=path (repeatable)");
    eval->add_option("--report", eval_args.report_path, "benchmark report CSV path");
    eval->add_flag("--no-trip-start", eval_args.no_trip_start,
                   "skip the trip-start rollout rows");
    eval->add_option("--probe", eval_args.probe,
                     "segment/prefix pairs to probe, e.g. --probe 11 10 11 0");

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "one-shot ETA prediction for a trip");
    predict->set_config("--config", "", "key=value config file; flags override file values");
    predict->add_option("--checkpoint", predict_args.checkpoint_path, "trained checkpoint")
        ->required();
    predict->add_option("--matrices", predict_args.matrices_path, "one day-matrix file")
        ->required();
    predict->add_option("--trip", predict_args.trip, "trip row to predict")->required();
    predict->add_option("--observe", predict_args.observed,
                        "number of already-observed segments");
    predict->add_flag("--sample", predict_args.sample, "sample from the distribution");
    predict->add_option("--seed", predict_args.seed, "sampling seed");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "serve live trip sessions over JSON lines");
    serve->set_config("--config", "", "key=value config file; flags override file values");
    serve->add_option("--checkpoint", serve_args.checkpoint_path, "trained checkpoint")
        ->required();
    serve->add_option("--port", serve_args.port, "TCP port (omit for standard streams)");
    serve->add_option("--context", serve_args.context_path,
                      "day-matrix file seeding the trip context");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(ingest_args);
        if (app.got_subcommand(synth)) return cmd_synth(synth_args);
        if (app.got_subcommand(train)) return cmd_train(train_args);
        if (app.got_subcommand(tune)) return cmd_tune(tune_args);
        if (app.got_subcommand(eval)) return cmd_eval(eval_args);
        if (app.got_subcommand(predict)) return cmd_predict(predict_args);
        if (app.got_subcommand(serve)) return cmd_serve(serve_args);
    } catch (const mcnn::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const mcnn::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const mcnn::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const mcnn::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const mcnn::SequencingError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
