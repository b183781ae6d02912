#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "vsmrf/diagnostics.hpp"
#include "vsmrf/errors.hpp"
#include "vsmrf/io.hpp"
#include "vsmrf/numeric_format.hpp"
#include "vsmrf/sampler.hpp"
#include "vsmrf/solver.hpp"
#include "vsmrf/stitcher.hpp"

namespace vsmrf::cli {

namespace fs = std::filesystem;

namespace {

/// Raised by commands that finished their outputs but must report failure.
struct NotConverged {};

std::string with_path(const fs::path& path, const std::string& what) { return path.string() + ": " + what; }

/// Moves the position into a compiler-style "file:line:column:" prefix.
ParseError in_file(const fs::path& path, const ParseError& e) {
    std::string where = path.string();
    if (e.line()) where += ":" + std::to_string(e.line());
    if (e.column()) where += ":" + std::to_string(e.column());
    return ParseError(where + ": " + e.message());
}

GraphSchema load_schema(const fs::path& path) {
    std::istringstream is(read_text_file(path));
    try {
        return read_schema(is);
    } catch (const ParseError& e) {
        throw in_file(path, e);
    }
}

Dataset load_dataset(const fs::path& path, const GraphSchema& schema) {
    std::istringstream is(read_text_file(path));
    try {
        return read_dataset(is, schema);
    } catch (const ParseError& e) {
        throw in_file(path, e);
    } catch (const DomainError& e) {
        throw DomainError(with_path(path, e.what()));
    } catch (const ValidationError& e) {
        throw ValidationError(with_path(path, e.what()));
    }
}

template <class F>
auto load_json_as(const fs::path& path, F&& convert) {
    try {
        return convert(read_json_file(path));
    } catch (const ParseError& e) {
        throw in_file(path, e);
    } catch (const ValidationError& e) {
        throw ValidationError(with_path(path, e.what()));
    }
}

/// Collects the digests and option echo of one invocation and writes the
/// manifest next to the primary output.
class ManifestWriter {
   public:
    ManifestWriter(std::string command, const std::vector<std::string>& args) {
        m_.tool_version = VSMRF_VERSION;
        m_.command = std::move(command);
        m_.args = args;
        m_.working_directory = fs::current_path().string();
    }

    void input(const std::string& path) { m_.inputs.push_back({path, sha256_file(path)}); }
    void output(const std::string& path, const std::string& contents) {
        write_text_file(path, contents);
        m_.outputs.push_back({path, sha256_hex(contents)});
    }
    void seed(std::uint64_t s) { m_.seed = s; }
    Json& config() { return m_.config; }

    void finish(const std::string& primary_output) {
        write_text_file(manifest_path_for(primary_output), dump_json(m_.to_json()));
    }

   private:
    RunManifest m_;
};

Json doubles_json(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(x);
    return a;
}

std::vector<double> descending_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    if (std::adjacent_find(v.begin(), v.end()) != v.end()) throw std::invalid_argument("penalty grid contains repeated values");
    return v;
}

StitchedGraph keep_top_k(const StitchedGraph& g, std::size_t k) {
    StitchedGraph out(g.schema(), g.rule());
    for (const auto& e : top_k_edges(g, k)) {
        const auto key = ordered_pair(e.r, e.t);
        out.edges().emplace(key, g.edges().at(key));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct GenerateOpts {
    std::string schema, out, profile;
    double edge_sparsity = 0.9;
    double param_sparsity = 0.5;
    double weight_scale = 1.0;
    std::uint64_t seed = 0;
};

void cmd_generate(const GenerateOpts& o, const std::vector<std::string>& args, bool edge_given, bool param_given) {
    ManifestWriter mw("generate", args);
    mw.input(o.schema);
    const auto schema = load_schema(o.schema);
    SparsityProfile profile{o.edge_sparsity, o.param_sparsity};
    if (!o.profile.empty()) {
        const auto base = o.profile == "high" ? SparsityProfile::high() : SparsityProfile::low();
        if (!edge_given) profile.edge_sparsity = base.edge_sparsity;
        if (!param_given) profile.param_sparsity = base.param_sparsity;
    }
    GeneratorOptions gen;
    gen.weight_scale = o.weight_scale;
    Rng rng(o.seed);
    const auto model = random_model(schema, profile, rng, gen);
    validate_joint_feasibility(model);

    mw.seed(o.seed);
    mw.config() = {{"edge_sparsity", profile.edge_sparsity}, {"param_sparsity", profile.param_sparsity},
                   {"weight_scale", o.weight_scale}, {"seed", o.seed}};
    mw.output(o.out, dump_json(model_to_json(model)));
    mw.finish(o.out);
    std::cout << "wrote " << o.out << ": " << schema.size() << " nodes, " << model.edges().size() << " edges\n";
}

struct SampleOpts {
    std::string model, out;
    std::size_t n = 0;
    std::size_t burn_in = 2000;
    std::size_t thin = 10;
    std::uint64_t seed = 0;
    bool skip_validation = false;
};

void cmd_sample(const SampleOpts& o, const std::vector<std::string>& args) {
    ManifestWriter mw("sample", args);
    mw.input(o.model);
    const auto model = load_json_as(o.model, model_from_json);
    if (!o.skip_validation) validate_joint_feasibility(model);
    const auto data = gibbs_sample(model, o.n, {o.burn_in, o.thin, o.seed});
    std::ostringstream os;
    write_dataset(os, data);

    mw.seed(o.seed);
    mw.config() = {{"n", o.n}, {"burn_in", o.burn_in}, {"thin", o.thin}, {"seed", o.seed}, {"skip_validation", o.skip_validation}};
    mw.output(o.out, os.str());
    mw.finish(o.out);
    std::cout << "wrote " << o.out << ": " << data.size() << " samples\n";
}

struct FitOpts {
    std::string data, schema, out, hessian = "auto";
    std::vector<double> lambda1, lambda2{kDefaultLambda2};
    double lambda1_max = 0.5, lambda1_min = 1e-4;
    int lambda1_count = 20;
    AdmmConfig admm;
    bool cold_start = false;
    bool strict = false;
    unsigned jobs = 1;
};

void cmd_fit(FitOpts o, const std::vector<std::string>& args) {
    ManifestWriter mw("fit", args);
    mw.input(o.schema);
    mw.input(o.data);
    o.admm.hessian_mode = parse_hessian_mode(o.hessian);
    o.admm.validate();
    const auto l1 = descending_unique(o.lambda1.empty() ? log_spaced_grid(o.lambda1_max, o.lambda1_min, o.lambda1_count) : o.lambda1);
    const auto l2 = descending_unique(o.lambda2);
    const auto schema = load_schema(o.schema);
    const auto data = load_dataset(o.data, schema);

    FitCollection fits{schema, l1, l2, !o.cold_start, {}};
    fits.paths = fit_all_nodes(data, l1, l2, o.admm, std::max(1u, o.jobs), !o.cold_start);

    std::size_t failed = 0;
    for (std::size_t r = 0; r < schema.size(); ++r) {
        for (const auto& f : fits.paths[r]) {
            if (f.converged) continue;
            ++failed;
            std::cerr << "warning: node '" << schema.node(r).name << "' at lambda1=" << format_double(f.lambda1)
                      << " lambda2=" << format_double(f.lambda2) << ": " << f.status << "\n";
        }
    }

    mw.config() = {{"lambda1", doubles_json(l1)},
                   {"lambda2", doubles_json(l2)},
                   {"alpha", o.admm.alpha},
                   {"eps_abs", o.admm.eps_abs},
                   {"eps_rel", o.admm.eps_rel},
                   {"max_iter", o.admm.max_iter},
                   {"newton_tol", o.admm.newton_tol},
                   {"newton_max", o.admm.newton_max},
                   {"hessian", std::string(hessian_mode_name(o.admm.hessian_mode))},
                   {"residual_balancing", o.admm.residual_balancing},
                   {"warm_start", !o.cold_start},
                   {"jobs", o.jobs},
                   {"strict", o.strict}};
    mw.output(o.out, dump_json(fits_to_json(fits)));
    mw.finish(o.out);
    std::cout << "wrote " << o.out << ": " << schema.size() << " nodes x " << fits.grid_size() << " grid points";
    if (failed) std::cout << ", " << failed << " fits did not converge";
    std::cout << "\n";
    if (failed && o.strict) throw NotConverged{};
}

struct StitchOpts {
    std::string fits, out, rule = "and", data;
    std::optional<double> lambda1, lambda2;
    std::optional<std::size_t> index;
};

void cmd_stitch(const StitchOpts& o, const std::vector<std::string>& args) {
    ManifestWriter mw("stitch", args);
    mw.input(o.fits);
    const auto fits = load_json_as(o.fits, fits_from_json);
    const auto rule = parse_stitch_rule(o.rule);
    std::size_t k = fits.grid_size() - 1;
    if (o.index) {
        if (*o.index >= fits.grid_size()) throw std::invalid_argument("--index beyond the fit grid");
        k = *o.index;
    } else if (o.lambda1 || o.lambda2) {
        k = fits.index_of(o.lambda1.value_or(fits.lambda1_grid.back()), o.lambda2.value_or(fits.lambda2_grid.back()));
    }
    GraphFile g{stitch(fits.schema, fits_at(fits.paths, k), rule), fits.lambda1_grid[k / fits.lambda2_grid.size()],
                fits.lambda2_grid[k % fits.lambda2_grid.size()]};
    if (!o.data.empty()) {
        mw.input(o.data);
        annotate_effects(g.graph, load_dataset(o.data, fits.schema).stat_means());
    }
    mw.config() = {{"rule", std::string(stitch_rule_name(rule))}, {"grid_index", k}, {"lambda1", g.lambda1},
                   {"lambda2", g.lambda2}, {"effects", !o.data.empty()}};
    mw.output(o.out, dump_json(graph_to_json(g)));
    mw.finish(o.out);
    std::cout << "wrote " << o.out << ": " << g.graph.edges().size() << " edges at lambda1=" << format_double(g.lambda1)
              << " lambda2=" << format_double(g.lambda2) << "\n";
}

struct EvalOpts {
    std::string truth, fits, out, level = "both", summary, data, conditions;
    std::vector<double> alpha_grid{1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.01};
};

void cmd_eval(const EvalOpts& o, const std::vector<std::string>& args) {
    ManifestWriter mw("eval", args);
    mw.input(o.truth);
    mw.input(o.fits);
    const auto truth = load_json_as(o.truth, model_from_json);
    const auto fits = load_json_as(o.fits, fits_from_json);
    if (!(truth.schema() == fits.schema)) throw ValidationError("truth and fits use different schemas");
    std::vector<RocLevel> levels;
    if (o.level == "both") {
        levels = {RocLevel::edge, RocLevel::parameter};
    } else {
        levels = {parse_roc_level(o.level)};
    }

    std::vector<RocPoint> points;
    Json aucs = Json::object();
    for (auto level : levels) {
        const auto curve = roc_curve(truth, fits.paths, level);
        points.insert(points.end(), curve.begin(), curve.end());
        const bool defined = std::all_of(curve.begin(), curve.end(), [](const RocPoint& p) { return p.tpr_defined && p.fpr_defined; });
        const std::string name(roc_level_name(level));
        if (defined) {
            aucs[name] = auc(curve);
            std::cout << name << " AUC " << format_double(aucs[name].get<double>()) << "\n";
        } else {
            aucs[name] = nullptr;
            std::cout << name << " AUC undefined (truth has no positives or no negatives)\n";
        }
    }
    std::ostringstream csv;
    write_roc_csv(csv, points);
    mw.config() = {{"level", o.level}};
    mw.output(o.out, csv.str());
    if (!o.summary.empty()) {
        mw.output(o.summary, dump_json({{"format", "vsmrf-auc"}, {"version", 1}, {"auc", aucs},
                                        {"grid_points", fits.grid_size()}}));
    }
    if (!o.conditions.empty()) {
        if (o.data.empty()) throw std::invalid_argument("--conditions needs --data");
        mw.input(o.data);
        const auto data = load_dataset(o.data, truth.schema());
        std::vector<SparsistencyReport> reports;
        for (std::size_t r = 0; r < truth.size(); ++r) reports.push_back(check_sparsistency_conditions(truth, data, r, o.alpha_grid));
        mw.config()["alpha_grid"] = doubles_json(o.alpha_grid);
        mw.output(o.conditions, dump_json(sparsistency_to_json(reports, truth.schema())));
    }
    mw.finish(o.out);
}

struct ExportOpts {
    std::string graph, out, format = "dot";
    std::size_t top_k = 0;
};

void cmd_export(const ExportOpts& o, const std::vector<std::string>& args) {
    ManifestWriter mw("export", args);
    mw.input(o.graph);
    const auto gf = load_json_as(o.graph, graph_from_json);
    const auto& g = gf.graph;
    const std::size_t k = o.top_k == 0 ? g.edges().size() : o.top_k;
    std::ostringstream os;
    if (o.format == "csv") {
        os << "rank,source,target,strength,effect\n";
        std::size_t rank = 0;
        for (const auto& e : top_k_edges(g, k)) {
            const int sign = g.edges().at(ordered_pair(e.r, e.t)).effect_sign;
            os << ++rank << ',' << g.schema().node(e.r).name << ',' << g.schema().node(e.t).name << ','
               << format_double(e.strength) << ',' << (sign > 0 ? "positive" : (sign < 0 ? "negative" : "neutral")) << '\n';
        }
    } else if (o.format == "dot") {
        write_dot(os, keep_top_k(g, k));
    } else {
        write_graphml(os, keep_top_k(g, k));
    }
    mw.config() = {{"format", o.format}, {"top_k", o.top_k}};
    mw.output(o.out, os.str());
    mw.finish(o.out);
}

int cmd_replay(const fs::path& manifest_path) {
    const auto m = load_json_as(manifest_path, RunManifest::from_json);
    if (m.tool != "vsmrf" || m.command == "replay") throw ValidationError("manifest does not describe a replayable command");
    if (m.tool_version != VSMRF_VERSION) {
        std::cerr << "warning: manifest written by version " << m.tool_version << ", replaying with " << VSMRF_VERSION << "\n";
    }
    const auto previous = fs::current_path();
    fs::current_path(m.working_directory);
    struct Restore {
        fs::path dir;
        ~Restore() { fs::current_path(dir); }
    } restore{previous};

    for (const auto& in : m.inputs) {
        if (sha256_file(in.path) != in.sha256) throw ValidationError("input '" + in.path + "' changed since the recorded run");
    }
    const int rc = run(m.args);
    if (rc != kSuccess && rc != kNotConverged) return rc;
    std::size_t mismatched = 0;
    for (const auto& out : m.outputs) {
        if (sha256_file(out.path) == out.sha256) {
            std::cout << "reproduced " << out.path << "\n";
        } else {
            ++mismatched;
            std::cerr << "error: " << out.path << " differs from the recorded output\n";
        }
    }
    return mismatched ? kDataError : rc;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Structure learning for mixed vector-space Markov random fields", "vsmrf"};
    app.set_version_flag("--version", VSMRF_VERSION);
    app.set_config("--config", "", "TOML or INI file supplying option values");
    app.require_subcommand(1);

    GenerateOpts gen;
    auto* generate = app.add_subcommand("generate", "Draw a random sparse model for a schema");
    generate->add_option("--schema", gen.schema, "Schema file")->required()->check(CLI::ExistingFile);
    auto* edge_opt = generate->add_option("--edge-sparsity", gen.edge_sparsity, "Probability that a node pair has no edge")
                         ->check(CLI::Range(0.0, 1.0));
    auto* param_opt = generate->add_option("--param-sparsity", gen.param_sparsity, "Probability that an edge entry is zero")
                          ->check(CLI::Range(0.0, 1.0));
    generate->add_option("--profile", gen.profile, "Preset sparsity (high: 0.9/0.5, low: 0.5/0.1)")->check(CLI::IsMember({"high", "low"}));
    generate->add_option("--weight-scale", gen.weight_scale, "Scale of edge weights")->check(CLI::PositiveNumber);
    generate->add_option("--seed", gen.seed, "Random seed");
    generate->add_option("--out", gen.out, "Model file to write")->required();

    SampleOpts smp;
    auto* sample = app.add_subcommand("sample", "Draw a dataset from a model by Gibbs sampling");
    sample->add_option("--model", smp.model, "Model file")->required()->check(CLI::ExistingFile);
    sample->add_option("--n", smp.n, "Number of samples")->required()->check(CLI::PositiveNumber);
    sample->add_option("--burn-in", smp.burn_in, "Scans discarded before the first sample");
    sample->add_option("--thin", smp.thin, "Scans between emitted samples")->check(CLI::PositiveNumber);
    sample->add_option("--seed", smp.seed, "Random seed");
    sample->add_flag("--skip-validation", smp.skip_validation, "Sample without the joint feasibility check");
    sample->add_option("--out", smp.out, "Dataset file to write")->required();

    FitOpts fo;
    auto* fit = app.add_subcommand("fit", "Estimate every node's neighbourhood over a penalty grid");
    fit->add_option("--data", fo.data, "Dataset file")->required()->check(CLI::ExistingFile);
    fit->add_option("--schema", fo.schema, "Schema file")->required()->check(CLI::ExistingFile);
    auto* l1 = fit->add_option("--lambda1", fo.lambda1, "Explicit group penalty values")->check(CLI::NonNegativeNumber);
    fit->add_option("--lambda1-max", fo.lambda1_max, "Largest group penalty of the default grid")->check(CLI::PositiveNumber)->excludes(l1);
    fit->add_option("--lambda1-min", fo.lambda1_min, "Smallest group penalty of the default grid")->check(CLI::PositiveNumber)->excludes(l1);
    fit->add_option("--lambda1-count", fo.lambda1_count, "Number of log-spaced group penalties")->check(CLI::PositiveNumber)->excludes(l1);
    fit->add_option("--lambda2", fo.lambda2, "Entrywise penalty values")->check(CLI::NonNegativeNumber);
    fit->add_option("--alpha", fo.admm.alpha, "ADMM penalty parameter")->check(CLI::PositiveNumber);
    fit->add_option("--eps-abs", fo.admm.eps_abs, "Absolute ADMM tolerance")->check(CLI::PositiveNumber);
    fit->add_option("--eps-rel", fo.admm.eps_rel, "Relative ADMM tolerance")->check(CLI::PositiveNumber);
    fit->add_option("--max-iter", fo.admm.max_iter, "ADMM iteration limit")->check(CLI::PositiveNumber);
    fit->add_option("--newton-tol", fo.admm.newton_tol, "Newton gradient tolerance")->check(CLI::PositiveNumber);
    fit->add_option("--newton-max", fo.admm.newton_max, "Newton steps per theta update")->check(CLI::PositiveNumber);
    fit->add_option("--hessian", fo.hessian, "auto|exact|woodbury|dense|diagonal")
        ->check(CLI::IsMember({"auto", "exact", "woodbury", "dense", "diagonal"}));
    fit->add_flag("--residual-balancing", fo.admm.residual_balancing, "Adapt alpha to balance the residuals");
    fit->add_flag("--cold-start", fo.cold_start, "Start every grid point from zero");
    fit->add_option("--jobs", fo.jobs, "Worker threads")->check(CLI::PositiveNumber);
    fit->add_flag("--strict", fo.strict, "Exit with status 3 when some fit does not converge");
    fit->add_option("--out", fo.out, "Fits file to write")->required();

    StitchOpts so;
    auto* st = app.add_subcommand("stitch", "Combine node neighbourhoods into one graph");
    st->add_option("--fits", so.fits, "Fits file")->required()->check(CLI::ExistingFile);
    st->add_option("--rule", so.rule, "and|or")->check(CLI::IsMember({"and", "or", "AND", "OR"}));
    auto* idx = st->add_option("--index", so.index, "Grid position (default: the last)");
    st->add_option("--lambda1", so.lambda1, "Group penalty of the grid point")->excludes(idx);
    st->add_option("--lambda2", so.lambda2, "Entrywise penalty of the grid point")->excludes(idx);
    st->add_option("--data", so.data, "Dataset whose statistic means give edge effect signs")->check(CLI::ExistingFile);
    st->add_option("--out", so.out, "Graph file to write")->required();

    EvalOpts eo;
    auto* ev = app.add_subcommand("eval", "ROC of estimated graphs against a known model");
    ev->add_option("--truth", eo.truth, "Model file of the true graph")->required()->check(CLI::ExistingFile);
    ev->add_option("--fits", eo.fits, "Fits file")->required()->check(CLI::ExistingFile);
    ev->add_option("--level", eo.level, "edge|parameter|both")->check(CLI::IsMember({"edge", "parameter", "both"}));
    ev->add_option("--summary", eo.summary, "JSON file receiving the AUC per level");
    ev->add_option("--data", eo.data, "Dataset for the sparsistency condition check")->check(CLI::ExistingFile);
    ev->add_option("--conditions", eo.conditions, "JSON file receiving the sparsistency condition report");
    ev->add_option("--alpha-grid", eo.alpha_grid, "Candidate incoherence parameters")->check(CLI::Range(0.0, 1.0));
    ev->add_option("--out", eo.out, "ROC CSV to write")->required();

    ExportOpts xo;
    auto* ex = app.add_subcommand("export", "Write a graph file as DOT, GraphML or a ranked edge list");
    ex->add_option("--graph", xo.graph, "Graph file")->required()->check(CLI::ExistingFile);
    ex->add_option("--format", xo.format, "dot|graphml|csv")->check(CLI::IsMember({"dot", "graphml", "csv"}));
    ex->add_option("--top-k", xo.top_k, "Keep the k strongest edges (0: all)");
    ex->add_option("--out", xo.out, "File to write")->required();

    std::string manifest;
    auto* rp = app.add_subcommand("replay", "Re-run a recorded command and compare its outputs");
    rp->add_option("manifest", manifest, "Run manifest")->required()->check(CLI::ExistingFile);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kSuccess : kUsage;
    }

    try {
        if (generate->parsed()) cmd_generate(gen, args, edge_opt->count() > 0, param_opt->count() > 0);
        if (sample->parsed()) cmd_sample(smp, args);
        if (fit->parsed()) cmd_fit(fo, args);
        if (st->parsed()) cmd_stitch(so, args);
        if (ev->parsed()) cmd_eval(eo, args);
        if (ex->parsed()) cmd_export(xo, args);
        if (rp->parsed()) return cmd_replay(manifest);
    } catch (const NotConverged&) {
        return kNotConverged;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const ConstraintViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kSuccess;
}

}  // namespace vsmrf::cli
