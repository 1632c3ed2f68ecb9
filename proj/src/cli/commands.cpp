#include "tsicl/cli/commands.hpp"

#include "tsicl/cli/dataset.hpp"
#include "tsicl/cli/plot.hpp"
#include "tsicl/dsp/io.hpp"
#include "tsicl/errors.hpp"
#include "tsicl/eval/metrics.hpp"
#include "tsicl/model/checkpoint.hpp"
#include "tsicl/model/train.hpp"
#include "tsicl/prompt/prompt.hpp"
#include "tsicl/synth/generator.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace tsicl::cli {

namespace fs = std::filesystem;

namespace {

// Independent streams for each consumer of the run seed.
constexpr std::uint64_t kTrainStream = 0x747261696e000001ULL;
constexpr std::uint64_t kEvalStream = 0x6576616c00000002ULL;
constexpr std::uint64_t kClassifyStream = 0x636c617373000003ULL;

dsp::PreprocessOptions preprocess_options(const RunConfig& c) {
    dsp::PreprocessOptions o;
    o.n_channels = c.size("n_channels");
    o.n_steps = c.size("sub_bands");
    const std::string& w = c.str("window");
    if (w == "rectangular") o.window = dsp::Window::Rectangular;
    else if (w == "hann") o.window = dsp::Window::Hann;
    else throw ArgumentError("config key 'window': expected rectangular or hann, got '" + w + "'");
    if (o.n_channels == 0 || o.n_steps == 0) throw ArgumentError("n_channels and sub_bands must be positive");
    if (o.n_channels + kNumClasses > kMaxVariates) {
        throw ArgumentError(std::to_string(o.n_channels) + " covariates + " + std::to_string(kNumClasses) +
                            " targets exceed the " + std::to_string(kMaxVariates) + "-variate limit");
    }
    return o;
}

std::size_t samples_per_context(const RunConfig& c) {
    const std::size_t spc = c.size("samples_per_context");
    if (spc < 5) throw ArgumentError("samples_per_context must be at least 5, got " + std::to_string(spc));
    return spc;
}

fs::path train_data_dir(const RunConfig& c) {
    return c.str("train_data_dir").empty() ? c.path("data_dir") : c.path("train_data_dir");
}

void check_dataset(const std::vector<prompt::LabeledCovariates>& data, const model::ModelConfig& m) {
    for (const auto& item : data) {
        if (item.covariates.n_channels() != m.n_covariates || item.covariates.n_steps() != m.horizon_steps) {
            throw ArgumentError("covariates are " + std::to_string(item.covariates.n_channels()) + "x" +
                                std::to_string(item.covariates.n_steps()) + " but the run expects " +
                                std::to_string(m.n_covariates) + "x" + std::to_string(m.horizon_steps) +
                                "; re-run preprocess");
        }
    }
}

/// Loads the checkpoint and checks it against the prompt geometry of the run.
model::Checkpoint load_model(const RunConfig& c) {
    auto ckpt = model::load_checkpoint(c.path("checkpoint"));
    const auto expected = model_config(c);
    const auto& m = ckpt.config;
    if (m.n_covariates != expected.n_covariates || m.horizon_steps != expected.horizon_steps ||
        m.context_steps != expected.context_steps) {
        throw ArgumentError("checkpoint expects N=" + std::to_string(m.n_covariates) + ", M=" +
                            std::to_string(m.horizon_steps) + ", L=" + std::to_string(m.context_steps) +
                            " but the run has N=" + std::to_string(expected.n_covariates) + ", M=" +
                            std::to_string(expected.horizon_steps) + ", L=" + std::to_string(expected.context_steps));
    }
    return ckpt;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

model::ModelConfig model_config(const RunConfig& c) {
    const auto pre = preprocess_options(c);
    model::ModelConfig m;
    m.n_covariates = pre.n_channels;
    m.n_targets = kNumClasses;
    m.horizon_steps = pre.n_steps;
    m.context_steps = (samples_per_context(c) - 1) * pre.n_steps;
    m.patch_size = c.size("patch_size");
    m.d_model = c.size("d_model");
    m.n_heads = c.size("n_heads");
    m.n_blocks = c.size("n_blocks");
    m.n_mixture = c.size("n_mixture");
    m.seed = c.u64("seed");
    m.validate();
    return m;
}

void cmd_synth(const RunConfig& c, std::ostream& log) {
    const std::size_t per_class = c.size("per_class");
    if (per_class == 0) throw ArgumentError("per_class must be at least 1");
    const auto pre = preprocess_options(c);
    synth::SignalSpec spec;
    spec.sample_rate_hz = c.real("sample_rate_hz");
    spec.duration_s = c.real("duration_s");
    spec.shaft_hz = c.real("shaft_hz");
    spec.bpfo_hz = c.real("bpfo_hz");
    spec.bpfi_hz = c.real("bpfi_hz");
    spec.resonance_hz = c.real("resonance_hz");
    spec.noise_floor = c.real("noise_floor");
    spec.validate(pre.n_channels * pre.n_steps);

    const auto data = synth::generate_dataset(per_class, spec, c.u64("seed"), std::max<std::size_t>(1, c.size("threads")));
    write_directory_atomically(c.path("data_dir"), [&](const fs::path& dir) {
        fs::create_directory(dir / "recordings");
        std::vector<ManifestEntry> manifest;
        for (const auto& item : data) {
            const std::string rel = "recordings/" + item.id + ".f32";
            dsp::write_samples_f32(dir / rel, item.recording.samples);
            manifest.push_back({item.id, item.label, rel, item.recording.sample_rate_hz, item.recording.samples.size(), 0});
        }
        write_manifest(dir / kManifestName, manifest);
    });
    log << "wrote " << data.size() << " recordings to " << c.path("data_dir").string() << '\n';
}

void cmd_preprocess(const RunConfig& c, std::ostream& log) {
    const auto pre = preprocess_options(c);
    const fs::path data_dir = c.path("data_dir");
    const fs::path manifest_path = data_dir / kManifestName;
    const auto manifest = read_manifest(manifest_path);

    std::vector<dsp::CovariateMatrix> matrices;
    for (const auto& e : manifest) {
        const std::string where = manifest_path.string() + ":" + std::to_string(e.line);
        const fs::path payload = data_dir / e.relpath;
        if (!fs::exists(payload)) throw DataError(where + ": payload " + e.relpath + " not found");
        dsp::RawRecording rec{dsp::read_samples(payload), e.sample_rate_hz, e.label};
        if (rec.samples.size() != e.n_samples) {
            throw CorruptionError(where + ": " + e.relpath + " has " + std::to_string(rec.samples.size()) +
                                  " samples, manifest says " + std::to_string(e.n_samples));
        }
        try {
            matrices.push_back(dsp::preprocess(rec, pre));
        } catch (const ArgumentError& err) {
            throw ArgumentError(where + ": " + err.what());
        }
    }
    write_directory_atomically(data_dir / kCovariateDir, [&](const fs::path& dir) {
        std::ofstream index(dir / kIndexName, std::ios::binary | std::ios::trunc);
        index << "id\tclass\tpath\tn_channels\tn_steps\n";
        for (std::size_t i = 0; i < manifest.size(); ++i) {
            const std::string rel = manifest[i].id + ".cov";
            dsp::write_covariates_bin(dir / rel, matrices[i]);
            index << manifest[i].id << '\t' << class_code(manifest[i].label) << '\t' << rel << '\t' << pre.n_channels
                  << '\t' << pre.n_steps << '\n';
        }
        if (!index) throw DataError("cannot write covariate index");
    });
    log << "wrote " << matrices.size() << " covariate matrices (" << pre.n_channels << "x" << pre.n_steps << ") to "
        << (data_dir / kCovariateDir).string() << '\n';
}

void cmd_train(const RunConfig& c, std::ostream& log) {
    const auto m = model_config(c);
    auto data = load_covariates(train_data_dir(c));
    check_dataset(data, m);
    const std::size_t train_spc =
        c.size("train_samples_per_context") == 0 ? samples_per_context(c) : c.size("train_samples_per_context");
    if (train_spc < 5) throw ArgumentError("train_samples_per_context must be at least 5, got " + std::to_string(train_spc));
    auto tm = m;
    tm.context_steps = (train_spc - 1) * m.horizon_steps;
    const std::string draw = c.str("train_query_draw");
    if (draw != "trailing" && draw != "independent") {
        throw ArgumentError("train_query_draw must be trailing or independent, got " + draw);
    }
    const prompt::ContextSampler sampler(std::move(data), train_spc, c.u64("seed") ^ kTrainStream,
                                         draw == "trailing" ? prompt::QueryDraw::Trailing
                                                            : prompt::QueryDraw::Independent);

    model::TrainOptions o;
    o.steps = c.size("steps");
    o.batch_size = c.size("batch_size");
    o.learning_rate = c.real("learning_rate");
    o.warmup_steps = c.size("warmup_steps");
    o.scale_floor = c.real("scale_floor");
    if (!(o.scale_floor > 0.0)) throw ArgumentError("scale_floor must be positive");
    if (o.steps == 0 || o.batch_size == 0) throw ArgumentError("steps and batch_size must be positive");
    o.on_step = [&](const model::StepRecord& r) {
        if ((r.step + 1) % 50 == 0 || r.step + 1 == o.steps) log << "step " << r.step + 1 << " loss " << r.loss << '\n';
    };
    const auto source = [&](std::size_t step, std::size_t slot) {
        return prompt::to_episode(sampler.draw(step * o.batch_size + slot), tm.context_steps);
    };
    const auto result = model::train(tm, source, o);

    fs::create_directories(c.path("out"));
    std::string trace = "step,loss,grad_norm,learning_rate\n";
    for (const auto& r : result.trace) {
        trace += std::to_string(r.step + 1) + "," + g17(r.loss) + "," + g17(r.grad_norm) + "," + g17(r.learning_rate) + "\n";
    }
    eval::write_text(c.path("out") / "loss.csv", trace);
    if (c.path("checkpoint").has_parent_path()) fs::create_directories(c.path("checkpoint").parent_path());
    model::save_checkpoint(result.params, m, c.path("checkpoint"));
    log << "saved " << c.path("checkpoint").string() << " (" << result.params.scalar_count() << " parameters, crc "
        << model::checkpoint_crc(c.path("checkpoint")) << ")\n";
}

void cmd_eval(const RunConfig& c, std::ostream& log) {
    const std::size_t n_contexts = c.size("n_contexts");
    if (n_contexts == 0) throw ArgumentError("n_contexts must be at least 1");
    const auto ckpt = load_model(c);
    auto data = load_covariates(c.path("data_dir"));
    check_dataset(data, ckpt.config);
    const prompt::ContextSampler sampler(std::move(data), samples_per_context(c), c.u64("seed") ^ kEvalStream);

    struct Row {
        prompt::SampledContext sampled;
        prompt::ClassificationResult result;
    };
    std::vector<Row> rows(n_contexts);
    const std::size_t workers = std::clamp<std::size_t>(c.size("threads"), 1, n_contexts);
    std::vector<eval::ConfusionMatrix> partial(workers);
    auto work = [&](std::size_t w) {
        for (std::size_t i = w; i < n_contexts; i += workers) {
            rows[i].sampled = sampler.draw(i);
            rows[i].result = prompt::classify(ckpt.params, ckpt.config, rows[i].sampled.context);
            partial[w].accumulate(rows[i].sampled.truth, rows[i].result.predicted);
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    eval::ConfusionMatrix cm;
    for (const auto& p : partial) cm.merge(p);
    const auto report = eval::compute_metrics(cm);

    std::string predictions = "context\tseed\ttrue\tpredicted\tlast_context_class\tintensity1\tintensity2\tintensity3\tintensity4\n";
    for (std::size_t i = 0; i < n_contexts; ++i) {
        const auto& r = rows[i];
        predictions += std::to_string(i) + "\t" + std::to_string(r.sampled.seed) + "\t" +
                       std::to_string(class_code(r.sampled.truth)) + "\t" + std::to_string(class_code(r.result.predicted)) +
                       "\t" + std::to_string(class_code(r.sampled.last_context_class));
        for (double v : r.result.final_intensities) predictions += "\t" + g17(v);
        predictions += "\n";
    }
    const std::string table = eval::render_table(report, cm);
    fs::create_directories(c.path("out"));
    eval::write_text(c.path("out") / "predictions.tsv", predictions);
    eval::write_text(c.path("out") / "report.txt", table);
    eval::write_text(c.path("out") / "report.csv", eval::render_csv(report));
    log << table;
}

void cmd_classify(const RunConfig& c, const fs::path& recording, std::ostream& out) {
    const auto ckpt = load_model(c);
    const auto pre = preprocess_options(c);
    if (!fs::exists(recording)) throw DataError("recording " + recording.string() + " not found");
    const dsp::RawRecording rec{dsp::read_samples(recording), c.real("sample_rate_hz"), std::nullopt};
    auto data = load_covariates(c.path("data_dir"));
    check_dataset(data, ckpt.config);
    const prompt::ContextSampler sampler(std::move(data), samples_per_context(c), c.u64("seed") ^ kClassifyStream);
    prompt::PromptContext context = sampler.draw(0).context;
    context.query = dsp::preprocess(rec, pre);

    const auto result = prompt::classify(ckpt.params, ckpt.config, context);
    for (std::size_t t = 0; t < kNumClasses; ++t) {
        out << class_name(class_from_index(t)) << '\t' << g17(result.final_intensities[t]) << '\n';
    }
    out << "predicted\t" << class_code(result.predicted) << '\n';
    fs::create_directories(c.path("out"));
    prompt::write_intensity_csv(c.path("out") / "intensity.csv", result);
}

void cmd_plot(const fs::path& csv, const fs::path& svg) {
    std::ifstream in(csv, std::ios::binary);
    if (!in) throw DataError("cannot open " + csv.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = render_svg(ss.str(), csv.string());
    if (svg.has_parent_path()) fs::create_directories(svg.parent_path());
    eval::write_text(svg, text);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Few-shot bearing-fault classification with a time-series forecaster", "tsicl"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_file;
    std::vector<std::string> overrides;
    std::map<std::string, std::optional<std::string>> flags = {
        {"seed", {}},       {"data_dir", {}},   {"checkpoint", {}}, {"n_contexts", {}}, {"samples_per_context", {}},
        {"n_channels", {}}, {"sub_bands", {}},  {"out", {}},        {"threads", {}},
    };
    app.add_option("--config", config_file, "key = value config file");
    for (auto& [key, slot] : flags) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        app.add_option(flag, slot, "overrides config key " + key);
    }
    app.add_option("--set", overrides, "override any config key: key=value");

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    auto* preprocess = app.add_subcommand("preprocess", "compute covariate matrices for a dataset");
    auto* train = app.add_subcommand("train", "train the forecaster on sampled prompts");
    auto* evaluate = app.add_subcommand("eval", "classify random prompts and report metrics");
    auto* classify = app.add_subcommand("classify", "classify one recording");
    std::string recording;
    classify->add_option("recording", recording, "float32 or CSV recording")->required();
    auto* plot = app.add_subcommand("plot", "render an intensity or loss CSV as SVG");
    std::string plot_input;
    plot->add_option("csv", plot_input, "intensity or loss CSV")->required();

    std::vector<std::string> argv(args.rbegin(), args.rend());
    try {
        app.parse(argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*plot) {
            const fs::path svg = flags["out"] ? fs::path(*flags["out"]) : fs::path(plot_input).replace_extension(".svg");
            cmd_plot(plot_input, svg);
            return kOk;
        }
        RunConfig config;
        if (!config_file.empty()) config.load_file(config_file);
        for (const auto& [key, slot] : flags) {
            if (slot) config.set(key, *slot);
        }
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + kv + "'");
            config.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        err << "# effective config\n";
        config.echo(err);

        if (*synth) cmd_synth(config, err);
        else if (*preprocess) cmd_preprocess(config, err);
        else if (*train) cmd_train(config, err);
        else if (*evaluate) cmd_eval(config, out);
        else if (*classify) cmd_classify(config, recording, out);
        return kOk;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const NumericError& e) {
        err << "error: " << e.what() << '\n';
        return kNumeric;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInternal;
    }
}

} // namespace tsicl::cli
