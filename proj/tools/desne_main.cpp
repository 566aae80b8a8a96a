// desne: DNN-free coreset selection over a 2-D manifold embedding, with
// optimizer benchmarks and a DDR-transfer energy model.

#include "desne/dataset.hpp"
#include "desne/distance.hpp"
#include "desne/energy.hpp"
#include "desne/error.hpp"
#include "desne/parallel.hpp"
#include "desne/pipeline.hpp"
#include "desne/scatter.hpp"
#include "desne/util.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace {

using desne::format_g17;

// Removes partially written outputs when a command fails mid-way.
class OutputGuard {
public:
    void track(const std::filesystem::path& p) { paths_.push_back(p); }
    void release() { paths_.clear(); }
    ~OutputGuard() {
        for (const auto& p : paths_) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
    }

private:
    std::vector<std::filesystem::path> paths_;
};

// Flat, ordered key=value view of the algorithmic options. Paths and the
// worker count stay out so the hash identifies the computation, not the
// invocation.
struct CanonicalConfig {
    std::vector<std::pair<std::string, std::string>> kv;

    void add(const std::string& k, const std::string& v) { kv.emplace_back(k, v); }
    void add(const std::string& k, const char* v) { kv.emplace_back(k, v); }
    void add(const std::string& k, double v) { kv.emplace_back(k, format_g17(v)); }
    void add(const std::string& k, long long v) { kv.emplace_back(k, std::to_string(v)); }
    void add(const std::string& k, std::uint64_t v) { kv.emplace_back(k, std::to_string(v)); }
    void add(const std::string& k, bool v) { kv.emplace_back(k, v ? "true" : "false"); }

    std::string hash() const {
        std::ostringstream os;
        for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
        return desne::fnv1a_hex(os.str());
    }
};

struct GlobalOptions {
    std::uint64_t seed = 0;
    int threads = 0; // 0: all cores
    std::string backend = "reference";
    long max_n = 20000;

    int effective_threads() const {
        return threads > 0 ? threads : desne::hardware_threads();
    }
    desne::ScalarMath math() const { return desne::ScalarMath(desne::parse_backend(backend)); }
};

struct InputOptions {
    std::string path;
    std::string format = "raw-f32";
    bool csv_labels = false;
    std::string normalize = "unit-range";
};

void add_input_flags(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("--input", in.path, "Dataset file")->required();
    cmd->add_option("--format", in.format, "Dataset format")
        ->check(CLI::IsMember({"cifar-binary", "raw-f32", "csv"}))
        ->capture_default_str();
    cmd->add_flag("--csv-labels", in.csv_labels, "Treat the final CSV column as labels");
    cmd->add_option("--normalize", in.normalize, "Input normalization")
        ->check(CLI::IsMember({"unit-range", "per-feature-standardize", "none"}))
        ->capture_default_str();
}

desne::DatasetMatrix load_input(const InputOptions& in, const GlobalOptions& g) {
    desne::DatasetMatrix m =
        desne::load_dataset(in.path, desne::parse_format(in.format), in.csv_labels);
    if (static_cast<long>(m.n()) > g.max_n) {
        throw desne::DataError(
            "dataset has " + std::to_string(m.n()) + " samples, above the cap of " +
            std::to_string(g.max_n) +
            " (the pipeline materializes N x N matrices); raise --max-n or use --per-class");
    }
    return m;
}

struct TsneOptions {
    int iterations = 1000;
    double learning_rate = 200.0;
    double exaggeration = 4.0;
    int exaggeration_iters = 100;
    double init_std = 1e-2;
};

void add_tsne_flags(CLI::App* cmd, TsneOptions& t) {
    cmd->add_option("--tsne-iters", t.iterations, "Gradient-descent iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--tsne-lr", t.learning_rate, "Learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--tsne-exaggeration", t.exaggeration, "Early exaggeration factor")
        ->capture_default_str();
    cmd->add_option("--tsne-exaggeration-iters", t.exaggeration_iters,
                    "Early exaggeration iterations")
        ->capture_default_str();
    cmd->add_option("--tsne-init-std", t.init_std, "Init standard deviation")
        ->capture_default_str();
}

struct SampleOptions {
    InputOptions input;
    double keep = 0.1;
    double perplexity = 15.0;
    std::string optimizer = "de";
    int de_pop = 30;
    long de_iters = 10000;
    int grid = 32;
    bool per_class = false;
    long tile = 64;
    TsneOptions tsne;
    std::string out;
    std::string embedding_out;
};

desne::SampleConfig make_sample_config(const SampleOptions& s, const GlobalOptions& g) {
    desne::SampleConfig cfg;
    cfg.normalize_mode = desne::parse_normalize(s.input.normalize);
    cfg.perplexity = s.perplexity;
    cfg.optimizer = desne::parse_optimizer(s.optimizer);
    cfg.de.pop_size = s.de_pop;
    cfg.de.max_iter = s.de_iters;
    cfg.tsne.iterations = s.tsne.iterations;
    cfg.tsne.learning_rate = s.tsne.learning_rate;
    cfg.tsne.early_exaggeration_factor = s.tsne.exaggeration;
    cfg.tsne.early_exaggeration_iters = s.tsne.exaggeration_iters;
    cfg.tsne.init_std = s.tsne.init_std;
    cfg.grid_cells = s.grid;
    cfg.keeping_ratio = s.keep;
    cfg.per_class = s.per_class;
    cfg.seed = g.seed;
    cfg.tile = static_cast<std::size_t>(s.tile);
    cfg.threads = g.effective_threads();
    cfg.math = g.math();
    return cfg;
}

CanonicalConfig sample_canonical(const char* command, const SampleOptions& s,
                                 const GlobalOptions& g) {
    CanonicalConfig c;
    c.add("command", command);
    c.add("csv_labels", s.input.csv_labels);
    c.add("de_iters", static_cast<long long>(s.de_iters));
    c.add("de_pop", static_cast<long long>(s.de_pop));
    c.add("format", s.input.format);
    c.add("grid", static_cast<long long>(s.grid));
    c.add("keep", s.keep);
    c.add("math_backend", g.backend);
    c.add("normalize", s.input.normalize);
    c.add("optimizer", s.optimizer);
    c.add("per_class", s.per_class);
    c.add("perplexity", s.perplexity);
    c.add("seed", g.seed);
    c.add("tile", static_cast<long long>(s.tile));
    c.add("tsne_exaggeration", s.tsne.exaggeration);
    c.add("tsne_exaggeration_iters", static_cast<long long>(s.tsne.exaggeration_iters));
    c.add("tsne_init_std", s.tsne.init_std);
    c.add("tsne_iters", static_cast<long long>(s.tsne.iterations));
    c.add("tsne_lr", s.tsne.learning_rate);
    return c;
}

int cmd_sample(const SampleOptions& s, const GlobalOptions& g) {
    desne::DatasetMatrix data = load_input(s.input, g);
    desne::SampleConfig cfg = make_sample_config(s, g);
    CanonicalConfig canonical = sample_canonical("sample", s, g);
    const std::string config_hash = canonical.hash();

    desne::SampleResult result = desne::run_sample_pipeline(data, cfg);

    OutputGuard guard;
    guard.track(s.out);
    desne::ManifestExtras extras;
    extras.config = canonical.kv;
    extras.config_hash = config_hash;
    desne::write_selection(result.selection, s.out, extras);
    if (!s.embedding_out.empty()) {
        guard.track(s.embedding_out);
        desne::write_embedding_csv(s.embedding_out, result.embedding, result.labels,
                                   config_hash);
    }
    guard.release();

    std::cout << "n=" << data.n() << "\n"
              << "d=" << data.d() << "\n"
              << "keep=" << format_g17(s.keep) << "\n"
              << "selected=" << result.selection.indices.size() << "\n"
              << "mean_perplexity_error=" << format_g17(result.mean_perplexity_error) << "\n"
              << "final_kl=" << format_g17(result.final_kl) << "\n"
              << "nonempty_cells=" << result.nonempty_cells << "\n"
              << "covered_cells=" << result.covered_cells << "\n"
              << "config_hash=" << config_hash << "\n";
    return 0;
}

int cmd_embed(const SampleOptions& s, const GlobalOptions& g) {
    desne::DatasetMatrix data = load_input(s.input, g);
    desne::SampleConfig cfg = make_sample_config(s, g);
    CanonicalConfig canonical = sample_canonical("embed", s, g);
    const std::string config_hash = canonical.hash();

    const desne::DatasetMatrix normalized = desne::normalize(data, cfg.normalize_mode);
    desne::DistanceMatrix d2 = desne::pairwise_sq_dist(normalized.data, cfg.tile, cfg.threads);
    desne::DEConfig de = cfg.de;
    de.seed = cfg.seed;
    desne::SigmaVector sigmas =
        desne::solve_sigmas(d2, cfg.perplexity, cfg.optimizer, de, cfg.threads, cfg.math);
    desne::AffinityMatrix p = desne::joint_affinities(
        desne::conditional_matrix(d2, sigmas, cfg.threads, cfg.math));
    desne::TsneConfig tc = cfg.tsne;
    tc.seed = cfg.seed;
    auto [embedding, trace] = desne::run_tsne(p, tc, cfg.math, cfg.threads);

    OutputGuard guard;
    guard.track(s.out);
    desne::write_embedding_csv(s.out, embedding.y, normalized.labels, config_hash);
    guard.release();

    std::cout << "n=" << data.n() << "\n"
              << "d=" << data.d() << "\n"
              << "mean_perplexity_error=" << format_g17(sigmas.mean_error()) << "\n"
              << "final_kl=" << format_g17(trace.kl_per_iteration.back()) << "\n"
              << "config_hash=" << config_hash << "\n";
    return 0;
}

struct BenchOptions {
    InputOptions input;
    double perplexity = 15.0;
    std::string out;
};

int cmd_bench(const BenchOptions& b, const GlobalOptions& g) {
    desne::DatasetMatrix data = load_input(b.input, g);
    const desne::DatasetMatrix normalized =
        desne::normalize(data, desne::parse_normalize(b.input.normalize));
    desne::DistanceMatrix d2 =
        desne::pairwise_sq_dist(normalized.data, 64, g.effective_threads());

    CanonicalConfig canonical;
    canonical.add("command", "bench-optimizers");
    canonical.add("csv_labels", b.input.csv_labels);
    canonical.add("format", b.input.format);
    canonical.add("math_backend", g.backend);
    canonical.add("normalize", b.input.normalize);
    canonical.add("perplexity", b.perplexity);
    canonical.add("seed", g.seed);
    const std::string config_hash = canonical.hash();

    std::ostringstream csv;
    csv << "# config_hash=" << config_hash << "\n";
    csv << "row_index,optimizer,sigma,abs_error,evals\n";
    std::ostringstream summary;
    for (desne::Optimizer opt :
         {desne::Optimizer::kBinarySearch, desne::Optimizer::kDifferentialEvolution,
          desne::Optimizer::kSimulatedAnnealing}) {
        desne::DEConfig de;
        de.seed = g.seed;
        desne::SigmaVector sv = desne::solve_sigmas(d2, b.perplexity, opt, de,
                                                    g.effective_threads(), g.math());
        for (std::size_t r = 0; r < sv.sigma.size(); ++r) {
            csv << r << "," << sv.optimizer_tag << "," << format_g17(sv.sigma[r]) << ","
                << format_g17(sv.per_row_error[r]) << "," << sv.evals[r] << "\n";
        }
        double mean = sv.mean_error();
        summary << "mean_error_" << sv.optimizer_tag << "=" << format_g17(mean) << "\n";
        summary << "log10_mean_error_" << sv.optimizer_tag << "="
                << format_g17(std::log10(mean)) << "\n";
    }

    OutputGuard guard;
    guard.track(b.out);
    {
        std::ofstream out(b.out, std::ios::binary);
        if (!out) throw desne::DataError("cannot write report: " + b.out);
        out << csv.str();
        if (!out) throw desne::DataError("short write: " + b.out);
    }
    guard.release();

    std::cout << "n=" << data.n() << "\n" << summary.str() << "config_hash=" << config_hash
              << "\n";
    return 0;
}

struct EnergyOptions {
    std::vector<std::string> methods{"dq", "nessa"};
    std::vector<double> keep_list{0.1, 0.2, 0.3};
    long long bits_per_image = 3072 * 8;
    long long n_images = 50000;
    double e_pcb = 10.0;
    double e_nm = 0.5;
    std::vector<std::string> passes_override;
    std::string csv_out;
    std::string json_out;
};

int cmd_energy(const EnergyOptions& e) {
    desne::EnergyCoefficients coeff{e.e_pcb, e.e_nm};
    desne::PresetPasses passes;
    for (const std::string& kv : e.passes_override) {
        auto pos = kv.find('=');
        if (pos == std::string::npos) {
            throw desne::DataError("--passes-override expects method=value, got '" + kv + "'");
        }
        const std::string key = kv.substr(0, pos);
        double value = 0.0;
        try {
            value = std::stod(kv.substr(pos + 1));
        } catch (const std::exception&) {
            throw desne::DataError("--passes-override: bad value in '" + kv + "'");
        }
        if (key == "dq") {
            passes.dq_pcb = value;
        } else if (key == "nessa") {
            passes.nessa_pcb = value;
        } else if (key == "nms") {
            passes.nms_nm = value;
        } else if (key == "kept") {
            passes.kept_pcb = value;
        } else {
            throw desne::DataError("--passes-override: unknown method '" + key + "'");
        }
    }
    std::vector<desne::TransferMethod> methods;
    for (const std::string& m : e.methods) methods.push_back(desne::parse_method(m));
    const std::uint64_t bits =
        static_cast<std::uint64_t>(e.bits_per_image) * static_cast<std::uint64_t>(e.n_images);

    CanonicalConfig canonical;
    canonical.add("bits_per_image", static_cast<long long>(e.bits_per_image));
    canonical.add("command", "energy");
    canonical.add("e_nm", e.e_nm);
    canonical.add("e_pcb", e.e_pcb);
    {
        std::ostringstream ks;
        for (double k : e.keep_list) ks << format_g17(k) << ";";
        canonical.add("keep_list", ks.str());
        std::ostringstream ms;
        for (const auto& m : e.methods) ms << m << ";";
        canonical.add("methods", ms.str());
    }
    canonical.add("n_images", static_cast<long long>(e.n_images));
    canonical.add("passes_dq", passes.dq_pcb);
    canonical.add("passes_kept", passes.kept_pcb);
    canonical.add("passes_nessa", passes.nessa_pcb);
    canonical.add("passes_nms", passes.nms_nm);
    const std::string config_hash = canonical.hash();

    std::vector<desne::EnergyRow> rows =
        desne::compare(methods, e.keep_list, bits, coeff, passes);

    OutputGuard guard;
    if (!e.csv_out.empty()) {
        guard.track(e.csv_out);
        std::ofstream out(e.csv_out, std::ios::binary);
        if (!out) throw desne::DataError("cannot write report: " + e.csv_out);
        out << desne::energy_report_csv(rows, config_hash);
    }
    if (!e.json_out.empty()) {
        guard.track(e.json_out);
        std::ofstream out(e.json_out, std::ios::binary);
        if (!out) throw desne::DataError("cannot write report: " + e.json_out);
        out << desne::energy_report_json(rows, config_hash);
    }
    guard.release();

    for (const auto& r : rows) {
        std::cout << "method=" << r.method << " keep=" << format_g17(r.keeping_ratio)
                  << " energy_j=" << format_g17(r.energy_j)
                  << " ratio_vs_nms=" << format_g17(r.ratio_vs_nms) << "\n";
    }
    std::cout << "config_hash=" << config_hash << "\n";
    return 0;
}

struct ScatterOptions {
    std::string embedding;
    std::string manifest;
    std::string csv_out;
    std::string svg_out;
};

int cmd_export_scatter(const ScatterOptions& s) {
    desne::EmbeddingTable table = desne::read_embedding_csv(s.embedding);
    desne::CoresetSelection sel = desne::read_selection(s.manifest);
    if (sel.indices.empty()) throw desne::DataError("manifest selects no points");

    std::vector<bool> selected(table.y.rows(), false);
    for (int idx : sel.indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= table.y.rows()) {
            throw desne::DataError("manifest index " + std::to_string(idx) +
                                   " is outside the embedding");
        }
        selected[static_cast<std::size_t>(idx)] = true;
    }

    // Carry the hash the embedding was produced under.
    std::string config_hash = "unknown";
    {
        std::ifstream in(s.embedding);
        std::string first;
        if (std::getline(in, first) && first.rfind("# config_hash=", 0) == 0) {
            config_hash = first.substr(std::string("# config_hash=").size());
        }
    }

    OutputGuard guard;
    if (!s.csv_out.empty()) {
        guard.track(s.csv_out);
        desne::write_scatter_csv(s.csv_out, table.y, table.labels, selected, config_hash);
    }
    if (!s.svg_out.empty()) {
        guard.track(s.svg_out);
        desne::write_scatter_svg(s.svg_out, table.y, selected, config_hash);
    }
    guard.release();

    std::cout << "n=" << table.y.rows() << "\n"
              << "selected=" << sel.indices.size() << "\n"
              << "config_hash=" << config_hash << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desne: manifold-space coreset selection toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value config file; flags override file values");

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Global 64-bit seed")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
    app.add_option("--math-backend", g.backend, "Scalar math backend")
        ->check(CLI::IsMember({"reference", "cordic-newton"}))
        ->capture_default_str();
    app.add_option("--max-n", g.max_n, "Refuse datasets larger than this")
        ->capture_default_str();

    const auto keep_check = CLI::Range(1e-9, 1.0);

    SampleOptions sample;
    CLI::App* sample_cmd = app.add_subcommand("sample", "Select a coreset end to end");
    sample_cmd->fallthrough();
    add_input_flags(sample_cmd, sample.input);
    sample_cmd->add_option("--keep", sample.keep, "Keeping ratio in (0, 1]")
        ->check(keep_check)
        ->capture_default_str();
    sample_cmd->add_option("--perplexity", sample.perplexity, "Target perplexity")
        ->capture_default_str();
    sample_cmd->add_option("--optimizer", sample.optimizer, "Sigma search algorithm")
        ->check(CLI::IsMember({"bs", "de", "sa"}))
        ->capture_default_str();
    sample_cmd->add_option("--de-pop", sample.de_pop, "DE population size")
        ->capture_default_str();
    sample_cmd->add_option("--de-iters", sample.de_iters, "DE iteration budget")
        ->capture_default_str();
    sample_cmd->add_option("--grid", sample.grid, "Grid cells per axis")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sample_cmd->add_flag("--per-class", sample.per_class, "Run the pipeline per label");
    sample_cmd->add_option("--tile", sample.tile, "Gram tile width")->capture_default_str();
    add_tsne_flags(sample_cmd, sample.tsne);
    sample_cmd->add_option("--out", sample.out, "Manifest path")->required();
    sample_cmd->add_option("--embedding-out", sample.embedding_out,
                           "Also write the embedding CSV");

    SampleOptions embed;
    CLI::App* embed_cmd = app.add_subcommand("embed", "Embed a dataset into 2-D");
    embed_cmd->fallthrough();
    add_input_flags(embed_cmd, embed.input);
    embed_cmd->add_option("--perplexity", embed.perplexity, "Target perplexity")
        ->capture_default_str();
    embed_cmd->add_option("--optimizer", embed.optimizer, "Sigma search algorithm")
        ->check(CLI::IsMember({"bs", "de", "sa"}))
        ->capture_default_str();
    embed_cmd->add_option("--de-pop", embed.de_pop, "DE population size")
        ->capture_default_str();
    embed_cmd->add_option("--de-iters", embed.de_iters, "DE iteration budget")
        ->capture_default_str();
    embed_cmd->add_option("--tile", embed.tile, "Gram tile width")->capture_default_str();
    add_tsne_flags(embed_cmd, embed.tsne);
    embed_cmd->add_option("--out", embed.out, "Embedding CSV path")->required();

    BenchOptions bench;
    CLI::App* bench_cmd =
        app.add_subcommand("bench-optimizers", "Compare bs/de/sa on one distance matrix");
    bench_cmd->fallthrough();
    add_input_flags(bench_cmd, bench.input);
    bench_cmd->add_option("--perplexity", bench.perplexity, "Target perplexity")
        ->capture_default_str();
    bench_cmd->add_option("--out", bench.out, "Report CSV path")->required();

    EnergyOptions energy;
    CLI::App* energy_cmd = app.add_subcommand("energy", "DDR transfer-energy comparison");
    energy_cmd->fallthrough();
    energy_cmd->add_option("--methods", energy.methods, "Methods to compare against nms")
        ->delimiter(',');
    energy_cmd->add_option("--keep-list", energy.keep_list, "Keeping ratios")->delimiter(',');
    energy_cmd->add_option("--bits-per-image", energy.bits_per_image, "Bits per image")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    energy_cmd->add_option("--n-images", energy.n_images, "Images per dataset pass")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    energy_cmd->add_option("--e-pcb", energy.e_pcb, "PCB link energy, pJ/bit")
        ->capture_default_str();
    energy_cmd->add_option("--e-nm", energy.e_nm, "Near-memory link energy, pJ/bit")
        ->capture_default_str();
    energy_cmd->add_option("--passes-override", energy.passes_override,
                           "Override preset pass counts, e.g. nessa=200");
    energy_cmd->add_option("--csv", energy.csv_out, "Write the CSV report here");
    energy_cmd->add_option("--json", energy.json_out, "Write the JSON report here");

    ScatterOptions scatter;
    CLI::App* scatter_cmd =
        app.add_subcommand("export-scatter", "Render an embedding with its selection");
    scatter_cmd->fallthrough();
    scatter_cmd->add_option("--embedding", scatter.embedding, "Embedding CSV")->required();
    scatter_cmd->add_option("--manifest", scatter.manifest, "Selection manifest")->required();
    scatter_cmd->add_option("--csv", scatter.csv_out, "Scatter CSV output");
    scatter_cmd->add_option("--svg", scatter.svg_out, "Scatter SVG output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sample_cmd->parsed()) return cmd_sample(sample, g);
        if (embed_cmd->parsed()) return cmd_embed(embed, g);
        if (bench_cmd->parsed()) return cmd_bench(bench, g);
        if (energy_cmd->parsed()) return cmd_energy(energy);
        if (scatter_cmd->parsed()) return cmd_export_scatter(scatter);
    } catch (const desne::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
