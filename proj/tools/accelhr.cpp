// accelhr: command-line front end for the heart-rate pipeline.

#include <accelhr/error.hpp>
#include <accelhr/evalx.hpp>
#include <accelhr/ingest.hpp>
#include <accelhr/link.hpp>
#include <accelhr/ppaw.hpp>
#include <accelhr/synth.hpp>

#include <CLI11.hpp>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace accelhr;

namespace {

// --- shared helpers ---------------------------------------------------------------

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

/// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text << std::flush;
        return;
    }
    write_file(path, text);
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

/// `--data` is either a dataset manifest (.json) or a feature matrix CSV.
std::vector<MinuteRecord> load_records(const std::string& data) {
    const fs::path p(data);
    if (p.extension() == ".json") return load_minutes(read_manifest(p));
    auto in = open_input(p);
    return parse_feature_csv(in);
}

std::vector<MinuteRecord> extract_from_csv(const fs::path& accel_path, const fs::path& hr_path, int rate) {
    auto hr_in = open_input(hr_path);
    const auto hr = parse_hr_csv(hr_in);
    auto accel_in = open_input(accel_path);
    AccelCsvReader reader(accel_in);
    std::vector<std::pair<std::int64_t, FeatureVector>> minutes;
    MinuteFeatureBuilder builder(rate, [&](std::int64_t m, const FeatureVector& fv) { minutes.emplace_back(m, fv); });
    AccelSample s;
    while (reader.next(s)) builder.push(s);
    builder.finish();
    return join_minutes(minutes, hr);
}

struct PpawFlags {
    std::size_t L = 10;
    std::size_t N = 5;
    double O = 3.0;
    double T = 10.0;
    std::int64_t TTL = 10;
    int max_depth = 8;
    std::uint64_t seed = 42;

    void add(CLI::App* app) {
        app->add_option("--L", L, "Learners in the ensemble")->capture_default_str();
        app->add_option("--N", N, "Variance history and labeled buffer size")->capture_default_str();
        app->add_option("--O", O, "Uncertainty multiplier")->capture_default_str();
        app->add_option("--T", T, "Per-learner error threshold (bpm)")->capture_default_str();
        app->add_option("--TTL", TTL, "Predictions before a forced retrain")->capture_default_str();
        app->add_option("--max-depth", max_depth, "Tree depth limit")->capture_default_str();
        app->add_option("--seed", seed, "Random seed")->capture_default_str();
    }

    PpawConfig config() const {
        PpawConfig c;
        c.L = L;
        c.N = N;
        c.O = O;
        c.T = T;
        c.TTL = TTL;
        c.tree.max_depth = max_depth;
        c.seed = seed;
        c.validate();
        return c;
    }
};

std::string trace_csv(std::span<const BootstrapMinute> boot, std::span<const StepOutcome> steps) {
    std::ostringstream out;
    write_trace_csv(out, boot, steps);
    return out.str();
}

std::string plot_csv(std::span<const PlotRow> rows) {
    std::ostringstream out;
    write_plot_csv(out, rows);
    return out.str();
}

std::string shortest(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::chrono::milliseconds seconds(double s) {
    if (!(s > 0.0)) throw ConfigError("timeouts must be > 0 seconds");
    return std::chrono::milliseconds(static_cast<std::int64_t>(s * 1000.0));
}

// --- subcommands ----------------------------------------------------------------------

struct SynthCmd {
    SynthConfig cfg;
    std::string out;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("synth", "Generate a synthetic drifting dataset and its manifest");
        app->add_option("--minutes-per-phase", cfg.n_minutes_per_phase, "Minutes per phase")->capture_default_str();
        app->add_option("--phases", cfg.n_phases, "Number of phases")->capture_default_str();
        app->add_option("--drift", cfg.drift_strength, "Per-phase heart-rate drift (bpm)")->capture_default_str();
        app->add_option("--noise", cfg.noise_bpm_std, "Heart-rate noise std (bpm)")->capture_default_str();
        app->add_option("--rate", cfg.sample_rate_hz, "Accelerometer rate (Hz)")->capture_default_str();
        app->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
        app->add_option("-o,--out", out, "Output directory")->required();
        app->callback([this] { run(); });
    }

    void run() {
        write_synth_dataset(cfg, out);
        std::cout << (fs::path(out) / "manifest.json").string() << "\n";
    }
};

struct ExtractCmd {
    std::string data, accel, hr, out;
    int rate = 50;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("extract", "Accel + heart-rate CSVs to a feature matrix CSV");
        auto* d = app->add_option("--data", data, "Dataset manifest (.json)");
        auto* a = app->add_option("--accel", accel, "Accelerometer CSV (t_ms,x,y,z)");
        auto* h = app->add_option("--hr", hr, "Heart-rate CSV (minute_index,bpm)");
        app->add_option("--rate", rate, "Accelerometer rate (Hz) for --accel input")->capture_default_str();
        app->add_option("-o,--out", out, "Feature CSV (stdout if omitted)");
        d->excludes(a)->excludes(h);
        a->needs(h);
        h->needs(a);
        app->callback([this] { run(); });
    }

    void run() {
        std::vector<MinuteRecord> recs;
        if (!data.empty()) {
            recs = load_minutes(read_manifest(data));
        } else if (!accel.empty()) {
            if (rate < 2) throw ConfigError("--rate must be >= 2");
            recs = extract_from_csv(accel, hr, rate);
        } else {
            throw ConfigError("give --data or --accel with --hr");
        }
        std::ostringstream csv;
        write_feature_csv(csv, recs);
        emit(out, csv.str());
    }
};

struct OfflineCmd {
    std::string data, out, mode = "same-phase";
    int phase = 0, train_phase = 0, test_phase = 1;
    OfflineConfig cfg;
    int max_depth = 8;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("offline", "Offline random-forest baseline (same-phase or cross-phase)");
        app->add_option("--data", data, "Manifest (.json) or feature CSV")->required();
        app->add_option("--mode", mode, "same-phase or cross-phase")
            ->check(CLI::IsMember({"same-phase", "cross-phase"}))
            ->capture_default_str();
        app->add_option("--phase", phase, "Phase for same-phase mode")->capture_default_str();
        app->add_option("--train-phase", train_phase, "Training phase for cross-phase mode")->capture_default_str();
        app->add_option("--test-phase", test_phase, "Test phase for cross-phase mode")->capture_default_str();
        app->add_option("--L", cfg.L, "Trees in the forest")->capture_default_str();
        app->add_option("--train-frac", cfg.train_frac, "Training fraction for same-phase mode")->capture_default_str();
        app->add_option("--max-depth", max_depth, "Tree depth limit")->capture_default_str();
        app->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
        app->add_option("-o,--out", out, "Output directory (report.json, dummy.json, predictions.csv)");
        app->callback([this] { run(); });
    }

    static std::vector<MinuteRecord> of_phase(const std::vector<MinuteRecord>& recs, int p) {
        std::vector<MinuteRecord> out;
        for (const auto& r : recs) {
            if (r.phase == p) out.push_back(r);
        }
        return out;
    }

    void run() {
        cfg.tree.max_depth = max_depth;
        cfg.validate();
        const auto recs = load_records(data);
        const auto result = mode == "same-phase"
                                ? run_offline_same_phase(of_phase(recs, phase), cfg)
                                : run_offline_cross_phase(of_phase(recs, train_phase), of_phase(recs, test_phase), cfg);
        if (out.empty()) {
            std::cout << report_to_json(result.forest);
            return;
        }
        const fs::path dir(out);
        write_file(dir / "report.json", report_to_json(result.forest));
        write_file(dir / "dummy.json", report_to_json(result.dummy));
        write_file(dir / "predictions.csv", plot_csv(result.predictions));
    }
};

struct PpawCmd {
    std::string data, out;
    PpawFlags flags;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("ppaw", "Online active-learning run over a labeled stream");
        app->add_option("--data", data, "Manifest (.json) or feature CSV")->required();
        flags.add(app);
        app->add_option("-o,--out", out, "Output directory (report.json, trace.csv, plot.csv)");
        app->callback([this] { run(); });
    }

    void run() {
        const auto cfg = flags.config();
        const auto recs = load_records(data);
        const auto e = run_ppaw_experiment(recs, cfg);
        if (out.empty()) {
            std::cout << report_to_json(e.report);
            return;
        }
        const fs::path dir(out);
        const auto trace = trace_csv(e.bootstrap, e.steps);
        write_file(dir / "report.json", report_to_json(e.report));
        write_file(dir / "trace.csv", trace);
        std::istringstream in(trace);
        write_file(dir / "plot.csv", plot_csv(plot_rows(parse_trace_csv(in), recs)));
    }
};

struct SweepCmd {
    std::string data, out;
    std::vector<double> O_values{1.0, 2.0, 3.0};
    PpawFlags flags;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("sweep-o", "Query fraction and error across O values");
        app->add_option("--data", data, "Manifest (.json) or feature CSV")->required();
        flags.add(app);
        // --O here is a list; replace the single-value flag
        app->remove_option(app->get_option("--O"));
        app->add_option("--O", O_values, "Comma-separated O values")->delimiter(',')->capture_default_str();
        app->add_option("-o,--out", out, "Sweep CSV (stdout if omitted)");
        app->callback([this] { run(); });
    }

    void run() {
        if (O_values.empty()) throw ConfigError("--O needs at least one value");
        auto cfg = flags.config();
        for (double o : O_values) {
            cfg.O = o;
            cfg.validate();
        }
        const auto recs = load_records(data);
        const auto reports = sweep_O(recs, cfg, O_values);
        std::ostringstream csv;
        write_sweep_csv(csv, O_values, reports);
        emit(out, csv.str());
    }
};

struct GatewayCmd {
    std::string host = "127.0.0.1", out, transcript;
    std::uint16_t port = 0;
    double timeout_s = 30.0, accept_timeout_s = 300.0;
    PpawFlags flags;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("gateway", "Serve one wearable session over TCP");
        app->add_option("--host", host, "Listen address")->capture_default_str();
        app->add_option("--port", port, "Listen port (0 picks a free one)")->capture_default_str();
        app->add_option("--timeout", timeout_s, "Peer silence timeout (s)")->capture_default_str();
        app->add_option("--accept-timeout", accept_timeout_s, "Wait for a wearable (s)")->capture_default_str();
        app->add_option("--transcript", transcript, "Write the session transcript here");
        flags.add(app);
        app->add_option("-o,--out", out, "Output directory (report.json, ledger.json, trace.csv)");
        app->callback([this] { run(); });
    }

    void run() {
        GatewayOptions opts;
        opts.ppaw = flags.config();
        opts.timeout = seconds(timeout_s);
        const auto accept_timeout = seconds(accept_timeout_s);

        TcpListener listener(host, port);
        std::cout << "listening on " << host << ":" << listener.port() << std::endl;
        auto conn = listener.accept(accept_timeout);
        if (!conn) throw IoError("no wearable connected within " + std::to_string(accept_timeout_s) + " s");

        std::optional<std::ofstream> log;
        std::optional<Transcript> tr;
        std::unique_ptr<RecordingChannel> rec;
        LineChannel* channel = conn.get();
        if (!transcript.empty()) {
            log.emplace(transcript, std::ios::binary);
            if (!*log) throw IoError("cannot write " + transcript);
            tr.emplace(*log);
            rec = std::make_unique<RecordingChannel>(*conn, *tr, '<');
            channel = rec.get();
        }
        const auto result = gateway_serve(*channel, opts);

        if (out.empty()) {
            std::cout << report_to_json(result.report) << ledger_to_json(result.ledger);
        } else {
            const fs::path dir(out);
            write_file(dir / "report.json", report_to_json(result.report));
            write_file(dir / "ledger.json", ledger_to_json(result.ledger));
            write_file(dir / "trace.csv", trace_csv(result.bootstrap, result.steps));
        }
        if (!result.completed) throw ProtocolError("session aborted: " + result.abort_reason);
    }
};

struct WearableCmd {
    std::string host = "127.0.0.1", data, accel, hr, out, transcript, patient = "synthetic";
    std::uint16_t port = 0;
    int rate = 50;
    double timeout_s = 30.0;
    std::optional<double> realtime;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("wearable", "Replay recorded accel/heart rate to a gateway");
        app->add_option("--host", host, "Gateway address")->capture_default_str();
        app->add_option("--port", port, "Gateway port")->required();
        auto* d = app->add_option("--data", data, "Dataset manifest (.json)");
        auto* a = app->add_option("--accel", accel, "Accelerometer CSV");
        auto* h = app->add_option("--hr", hr, "Heart-rate CSV");
        app->add_option("--rate", rate, "Accelerometer rate (Hz) for --accel input")->capture_default_str();
        app->add_option("--patient-id", patient, "Patient id sent in HELLO")->capture_default_str();
        app->add_option("--realtime", realtime, "Pace the replay at this multiple of wall-clock speed");
        app->add_option("--timeout", timeout_s, "Gateway silence timeout (s)")->capture_default_str();
        app->add_option("--transcript", transcript, "Write the session transcript here");
        app->add_option("-o,--out", out, "Output directory (ledger.json, predictions.csv)");
        d->excludes(a)->excludes(h);
        a->needs(h);
        h->needs(a);
        app->callback([this] { run(); });
    }

    void run() {
        fs::path accel_path, hr_path;
        WearableOptions opts;
        opts.patient_id = patient;
        opts.sample_rate_hz = rate;
        opts.timeout = seconds(timeout_s);
        if (realtime && !(*realtime > 0.0)) throw ConfigError("--realtime must be > 0");
        opts.realtime = realtime;
        if (!data.empty()) {
            const auto m = read_manifest(data);
            accel_path = m.accel_path();
            hr_path = m.hr_path();
            opts.sample_rate_hz = m.config.sample_rate_hz;
        } else if (!accel.empty()) {
            accel_path = accel;
            hr_path = hr;
        } else {
            throw ConfigError("give --data or --accel with --hr");
        }

        auto hr_in = open_input(hr_path);
        const auto hr_samples = parse_hr_csv(hr_in);
        auto accel_in = open_input(accel_path);
        AccelCsvReader reader(accel_in);
        const SampleSource source = [&reader](AccelSample& s) { return reader.next(s); };

        auto conn = tcp_connect(host, port, opts.timeout);
        std::optional<std::ofstream> log;
        std::optional<Transcript> tr;
        std::unique_ptr<RecordingChannel> rec;
        LineChannel* channel = conn.get();
        if (!transcript.empty()) {
            log.emplace(transcript, std::ios::binary);
            if (!*log) throw IoError("cannot write " + transcript);
            tr.emplace(*log);
            rec = std::make_unique<RecordingChannel>(*conn, *tr, '>');
            channel = rec.get();
        }
        const auto result = wearable_replay(*channel, source, hr_samples, opts);

        if (out.empty()) {
            std::cout << ledger_to_json(result.ledger);
            return;
        }
        const fs::path dir(out);
        write_file(dir / "ledger.json", ledger_to_json(result.ledger));
        std::string csv = "minute_index,bpm,variance,queried\n";
        for (const auto& p : result.predictions) {
            csv += std::to_string(p.minute_index) + "," + shortest(p.bpm) + "," + shortest(p.variance) +
                   (p.queried ? ",1\n" : ",0\n");
        }
        write_file(dir / "predictions.csv", csv);
    }
};

struct ReportCmd {
    std::string trace, data, out;

    void add(CLI::App& root) {
        auto* app = root.add_subcommand("report", "Plot-data CSV (minute_index,true_bpm,predicted_bpm) from a trace");
        app->add_option("--trace", trace, "Trace CSV from ppaw or gateway")->required();
        app->add_option("--data", data, "Manifest (.json) or feature CSV supplying true heart rate");
        app->add_option("-o,--out", out, "Plot CSV (stdout if omitted)");
        app->callback([this] { run(); });
    }

    void run() {
        auto in = open_input(trace);
        const auto rows = parse_trace_csv(in);
        std::vector<MinuteRecord> recs;
        if (!data.empty()) recs = load_records(data);
        emit(out, plot_csv(plot_rows(rows, recs)));
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Accelerometer-driven heart-rate estimation with on-demand sensor queries"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "accelhr 0.1.0");

    SynthCmd synth;
    ExtractCmd extract;
    OfflineCmd offline;
    PpawCmd ppaw;
    SweepCmd sweep;
    GatewayCmd gateway;
    WearableCmd wearable;
    ReportCmd report;
    synth.add(app);
    extract.add(app);
    offline.add(app);
    ppaw.add(app);
    sweep.add(app);
    gateway.add(app);
    wearable.add(app);
    report.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
