#pragma once

// Subcommand dispatcher behind the `articulate` binary. Layering: built-in
// defaults < --config JSON file < explicit flags.

#include "articulate/catalog.hpp"
#include "articulate/course2vec.hpp"
#include "articulate/dispersion.hpp"
#include "articulate/embedding.hpp"
#include "articulate/model_io.hpp"
#include "articulate/predict.hpp"
#include "articulate/report.hpp"
#include "articulate/service.hpp"
#include "articulate/ssa.hpp"
#include "articulate/synthetic.hpp"
#include "articulate/threshold.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <functional>
#include <map>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace articulate::cli {

namespace fs = std::filesystem;

struct RunConfig {
    std::string subcommand;
    std::uint64_t seed = 42;
    std::string out = ".";
    std::string config_path;
    ReportFormat format = ReportFormat::table;

    std::string institutions, courses, articulations, enrollments, embeddings, concat, model;
    std::size_t dim = 0;
    std::size_t concat_dim = 0;

    SsaConfig ssa;
    Course2vecConfig c2v;
    int folds = 5;

    std::optional<double> threshold;
    std::string threshold_report;
    std::string mode = "per-institution";
    std::string scope = "system";

    std::uint64_t n_candidates = 0;
    std::uint64_t n_existing = 0;
    double rate = 0.0;

    PlantedBenchmarkConfig synth;

    int port = 8080;
    std::string host = "127.0.0.1";
    std::string decisions;
    std::string expansions;
    std::string static_dir;
};

namespace detail {

/// Flags that were given on the command line win over the config file.
class Layer {
public:
    Layer(const nlohmann::json& config) : config_(config) {}

    template <typename T>
    void apply(bool given, const char* key, T& target, const char* section = nullptr) const {
        if (given) return;
        const nlohmann::json* node = &config_;
        if (section) {
            if (!config_.contains(section)) return;
            node = &config_[section];
        }
        if (node->is_object() && node->contains(key)) {
            try {
                target = (*node)[key].get<T>();
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::InvalidConfig,
                            std::string("config key '") + (section ? std::string(section) + "." : "") + key +
                                "': " + e.what());
            }
        }
    }

private:
    const nlohmann::json& config_;
};

inline void require_inputs(const std::vector<std::pair<std::string, std::string>>& inputs) {
    for (const auto& [flag, path] : inputs)
        ARTICULATE_REQUIRE(!path.empty(), ErrorCode::UsageError, "missing required option --" + flag);
    for (const auto& [flag, path] : inputs)
        ARTICULATE_REQUIRE(fs::is_regular_file(path), ErrorCode::IoError, "missing input file: " + path);
}

inline std::string out_path(const RunConfig& rc, const std::string& name) {
    fs::create_directories(rc.out);
    return (fs::path(rc.out) / name).string();
}

inline Catalog load_catalog_inputs(const RunConfig& rc) {
    return load_catalog(rc.institutions, rc.courses);
}

/// Loads, filters to the catalog, normalizes and (optionally) concatenates.
inline EmbeddingTable load_embedding_inputs(const RunConfig& rc, const Catalog& catalog) {
    ARTICULATE_REQUIRE(rc.dim > 0, ErrorCode::UsageError, "--dim is required with --embeddings");
    auto table = load_embeddings(rc.embeddings, rc.dim);
    std::vector<std::string> dropped;
    if (restrict_to_catalog(table, catalog, &dropped) > 0)
        std::cerr << "warning: dropped " << dropped.size() << " embedding records absent from the catalog (first: '"
                  << dropped.front() << "')\n";
    table = l2_normalize(table);
    if (!rc.concat.empty()) {
        ARTICULATE_REQUIRE(rc.concat_dim > 0, ErrorCode::UsageError, "--concat-dim is required with --concat");
        auto other = load_embeddings(rc.concat, rc.concat_dim);
        dropped.clear();
        if (restrict_to_catalog(other, catalog, &dropped) > 0)
            std::cerr << "warning: dropped " << dropped.size() << " records of " << rc.concat
                      << " absent from the catalog\n";
        table = l2_normalize(compose(table, l2_normalize(other)));
    }
    return table;
}

inline AlignmentModel load_or_identity(const RunConfig& rc, const EmbeddingTable& table, const Catalog& catalog) {
    if (rc.model.empty()) return AlignmentModel::identity(table.dim, catalog);
    auto model = load_model(rc.model);
    ARTICULATE_REQUIRE(model.dim == table.dim, ErrorCode::DimensionMismatch,
                       "model dimension " + std::to_string(model.dim) + " != embedding dimension " +
                           std::to_string(table.dim));
    return model;
}

inline Json ssa_json(const SsaConfig& c) {
    Json j;
    j["learning_rate"] = c.learning_rate;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["reorthogonalize_every"] = c.reorthogonalize_every;
    j["convergence_tol"] = c.convergence_tol;
    j["seed"] = c.seed;
    j["symmetrize"] = c.symmetrize;
    return j;
}

inline std::vector<std::pair<std::string, std::string>> common_inputs(const RunConfig& rc) {
    return {{"institutions", rc.institutions}, {"courses", rc.courses},   {"articulations", rc.articulations},
            {"enrollments", rc.enrollments},   {"embeddings", rc.embeddings}, {"concat", rc.concat},
            {"model", rc.model},               {"config", rc.config_path}};
}

inline void finish(const RunConfig& rc, Json report, const std::string& file) {
    report["provenance"] = provenance(rc.seed, common_inputs(rc));
    emit_report(report, ReportFormat::json, out_path(rc, file));
    emit_report(report, rc.format);
}

inline void write_provenance_sidecar(const RunConfig& rc, const std::string& artifact) {
    emit_report(provenance(rc.seed, common_inputs(rc)), ReportFormat::json, artifact + ".provenance.json");
}

inline ExpansionResult read_expansions(const std::string& path, const Catalog& catalog) {
    ExpansionResult r;
    for (const auto& row : csv::read_table(path, {"source_course_id", "target_course_id", "cosine"})) {
        const std::string where = path + " line " + std::to_string(row.line);
        catalog.course(row.fields[0]);
        catalog.course(row.fields[1]);
        double c = 0.0;
        try {
            c = std::stod(row.fields[2]);
        } catch (const std::exception&) {
            throw Error(ErrorCode::MalformedRow, where + ": cosine is not a number");
        }
        r.new_pairs.push_back({row.fields[0], row.fields[1], c});
    }
    return r;
}

// ---- subcommands --------------------------------------------------------

inline int run_ingest(const RunConfig& rc) {
    require_inputs({{"institutions", rc.institutions}, {"courses", rc.courses}});
    auto catalog = load_catalog_inputs(rc);
    Json j;
    j["institutions"] = catalog.institutions().size();
    j["courses"] = catalog.courses().size();
    if (!rc.articulations.empty()) {
        require_inputs({{"articulations", rc.articulations}});
        auto pairs = load_articulations(rc.articulations, catalog);
        j["articulations"] = pairs.size();
        j["by_segment"] = to_json(segment_breakdown(pairs, catalog));
        if (!pairs.empty()) {
            auto f = fanout_stats(pairs, &catalog);
            j["fanout"] = Json{{"mean", f.mean}, {"std", f.std}, {"groups", f.groups}};
        }
    }
    if (!rc.enrollments.empty()) {
        require_inputs({{"enrollments", rc.enrollments}});
        auto seqs = load_enrollments(rc.enrollments, catalog);
        std::size_t events = 0;
        for (const auto& s : seqs) events += s.events.size();
        j["students"] = seqs.size();
        j["enrollment_events"] = events;
    }
    finish(rc, j, "ingest.json");
    return 0;
}

inline int run_synth(const RunConfig& rc) {
    auto cfg = rc.synth;
    cfg.seed = rc.seed;
    auto bench = make_planted_benchmark(cfg);
    std::string inst = csv::join_row({"id", "name", "segment"});
    for (const auto& [id, i] : bench.catalog.institutions())
        inst += csv::join_row({id, i.name, i.segment == Segment::two_year ? "2" : "4"});
    std::string courses = csv::join_row({"id", "institution_id", "title", "description", "cip2", "level", "transferable"});
    for (const auto& [id, c] : bench.catalog.courses())
        courses += csv::join_row({id, c.institution_id, c.title, c.description, c.cip2.value_or(""),
                                  c.level == Level::lower_division ? "L" : "U", c.transferable ? "1" : "0"});
    std::string arts = csv::join_row({"source_course_id", "target_course_id"});
    for (const auto& p : bench.pairs) arts += csv::join_row({p.source_course_id, p.target_course_id});
    write_text(out_path(rc, "institutions.csv"), inst);
    write_text(out_path(rc, "courses.csv"), courses);
    write_text(out_path(rc, "articulations.csv"), arts);
    save_embeddings(out_path(rc, "embeddings.jsonl"), bench.embeddings);
    Json j;
    j["institutions"] = bench.catalog.institutions().size();
    j["courses"] = bench.catalog.courses().size();
    j["articulations"] = bench.pairs.size();
    j["dim"] = cfg.dim;
    j["noise"] = cfg.noise;
    j["nuisance"] = cfg.nuisance;
    finish(rc, j, "synth.json");
    return 0;
}

inline int run_course2vec(const RunConfig& rc) {
    require_inputs({{"institutions", rc.institutions}, {"courses", rc.courses}, {"enrollments", rc.enrollments}});
    auto catalog = load_catalog_inputs(rc);
    auto seqs = load_enrollments(rc.enrollments, catalog);
    auto cfg = rc.c2v;
    cfg.seed = rc.seed;
    auto table = train_course2vec(seqs, cfg);
    const auto path = out_path(rc, "course2vec.jsonl");
    save_embeddings(path, table);
    write_provenance_sidecar(rc, path);
    Json j;
    j["vectors"] = table.size();
    j["dim"] = table.dim;
    j["students"] = seqs.size();
    j["output"] = path;
    finish(rc, j, "course2vec.json");
    return 0;
}

inline int run_train(const RunConfig& rc) {
    require_inputs({{"institutions", rc.institutions}, {"courses", rc.courses}, {"articulations", rc.articulations},
                    {"embeddings", rc.embeddings}});
    auto catalog = load_catalog_inputs(rc);
    auto pairs = load_articulations(rc.articulations, catalog);
    auto table = load_embedding_inputs(rc, catalog);
    auto usable = embeddable_pairs(pairs, table);
    if (usable.size() < pairs.size())
        std::cerr << "warning: " << pairs.size() - usable.size() << " articulations lack an embedding and are skipped\n";
    auto cfg = rc.ssa;
    cfg.seed = rc.seed;
    AlignmentModel model = cfg.epochs == 0 ? AlignmentModel::identity(table.dim, catalog)
                                           : train_ssa(table, usable, catalog, cfg);
    if (cfg.epochs == 0) model.final_loss = usable.empty() ? 0.0 : alignment_loss(model, table, usable, catalog);
    model.seed = cfg.seed;
    model.trained_on = "all established articulations (" + std::to_string(usable.size()) + " pairs)";
    const auto path = out_path(rc, "model.ssa");
    save_model(path, model, Json{{"ssa_config", ssa_json(cfg)}, {"provenance", provenance(rc.seed, common_inputs(rc))}});
    Json j;
    j["model"] = path;
    j["dim"] = model.dim;
    j["institutions"] = model.matrices.size();
    j["training_pairs"] = usable.size();
    j["epochs_run"] = model.epochs_run;
    j["initial_loss"] = model.loss_history.empty() ? model.final_loss : model.loss_history.front();
    j["final_loss"] = model.final_loss;
    j["max_orthogonality_error"] = model.max_orthogonality_error();
    j["ssa_config"] = ssa_json(cfg);
    finish(rc, j, "train.json");
    return 0;
}

inline int run_evaluate(const RunConfig& rc) {
    require_inputs({{"institutions", rc.institutions}, {"courses", rc.courses}, {"articulations", rc.articulations},
                    {"embeddings", rc.embeddings}});
    auto catalog = load_catalog_inputs(rc);
    auto pairs = load_articulations(rc.articulations, catalog);
    auto table = load_embedding_inputs(rc, catalog);
    auto cfg = rc.ssa;
    cfg.seed = rc.seed;
    auto report = cross_validate(catalog, table, pairs, cfg, rc.folds);
    Json j = to_json(report);
    j["folds"] = rc.folds;
    j["ssa_config"] = ssa_json(cfg);
    finish(rc, j, "eval.json");
    return 0;
}

inline int run_threshold(const RunConfig& rc) {
    require_inputs({{"institutions", rc.institutions}, {"courses", rc.courses}, {"articulations", rc.articulations},
                    {"embeddings", rc.embeddings}});
    auto catalog = load_catalog_inputs(rc);
    auto pairs = load_articulations(rc.articulations, catalog);
    auto table = load_embedding_inputs(rc, catalog);
    auto model = load_or_identity(rc, table, catalog);
    auto shared = encode_shared(model, table, catalog);
    std::size_t skipped_pos = 0, skipped_neg = 0;
    auto pos = pair_cosines(shared, as_course_pairs(pairs), &skipped_pos);
    auto negatives = sample_pseudo_negatives(catalog, pairs, std::max<std::size_t>(1, pos.size()), rc.seed);
    auto neg = pair_cosines(shared, negatives, &skipped_neg);
    auto rep = threshold_report(pos, neg);
    const auto roc_path = out_path(rc, "roc.csv");
    write_text(roc_path, roc_csv(rep));
    write_provenance_sidecar(rc, roc_path);
    Json j = to_json(rep);
    j["skipped_positives"] = skipped_pos;
    j["skipped_negatives"] = skipped_neg;
    finish(rc, j, "threshold.json");
    return 0;
}

inline double resolve_threshold(const RunConfig& rc) {
    if (rc.threshold) return *rc.threshold;
    ARTICULATE_REQUIRE(!rc.threshold_report.empty(), ErrorCode::UsageError,
                       "expand needs --threshold or --threshold-report");
    require_inputs({{"threshold-report", rc.threshold_report}});
    std::ifstream in(rc.threshold_report);
    try {
        return nlohmann::json::parse(in).at("best_threshold").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedRow, rc.threshold_report + ": " + e.what());
    }
}

inline int run_expand(const RunConfig& rc) {
    require_inputs({{"institutions", rc.institutions}, {"courses", rc.courses}, {"articulations", rc.articulations},
                    {"embeddings", rc.embeddings}});
    const double threshold = resolve_threshold(rc);
    ARTICULATE_REQUIRE(rc.mode == "per-institution" || rc.mode == "global", ErrorCode::UsageError,
                       "--mode must be per-institution or global");
    auto catalog = load_catalog_inputs(rc);
    auto pairs = load_articulations(rc.articulations, catalog);
    auto table = load_embedding_inputs(rc, catalog);
    auto model = load_or_identity(rc, table, catalog);
    auto shared = encode_shared(model, table, catalog);
    auto res = expand(shared, catalog, pairs, threshold,
                      rc.mode == "global" ? ExpansionMode::global : ExpansionMode::per_institution);
    const auto csv_path = out_path(rc, "expansions.csv");
    write_text(csv_path, expansions_csv(res));
    write_provenance_sidecar(rc, csv_path);
    Json j = to_json(res, pairs.size());
    j["mode"] = rc.mode;
    finish(rc, j, "expansion.json");
    return 0;
}

inline int run_dispersion(const RunConfig& rc) {
    require_inputs({{"institutions", rc.institutions}, {"courses", rc.courses}, {"embeddings", rc.embeddings}});
    ARTICULATE_REQUIRE(rc.scope == "system" || rc.scope == "institutional", ErrorCode::UsageError,
                       "--scope must be system or institutional");
    auto catalog = load_catalog_inputs(rc);
    auto table = load_embedding_inputs(rc, catalog);
    auto model = load_or_identity(rc, table, catalog);
    auto shared = encode_shared(model, table, catalog);
    const auto scope = rc.scope == "system" ? DispersionScope::system : DispersionScope::institutional;
    auto rep = dispersion_report(table, shared, catalog, scope);
    const auto csv_path = out_path(rc, "dispersion_" + rc.scope + ".csv");
    write_text(csv_path, dispersion_csv(rep));
    write_provenance_sidecar(rc, csv_path);
    finish(rc, to_json(rep), "dispersion_" + rc.scope + ".json");
    return 0;
}

inline int run_project(const RunConfig& rc) {
    auto p = project_adoption(rc.n_candidates, rc.rate, rc.n_existing);
    finish(rc, to_json(p, rc.n_candidates, rc.rate, rc.n_existing), "projection.json");
    return 0;
}

inline int run_serve(const RunConfig& rc) {
    ARTICULATE_REQUIRE(!rc.decisions.empty(), ErrorCode::UsageError, "serve needs --decisions");
    std::optional<std::vector<service::Scenario>> scenarios;
    service::ReviewService::Options opts;
    if (!rc.expansions.empty()) {
        require_inputs({{"institutions", rc.institutions}, {"courses", rc.courses}, {"embeddings", rc.embeddings},
                        {"expansions", rc.expansions}});
        auto catalog = load_catalog_inputs(rc);
        auto table = load_embedding_inputs(rc, catalog);
        auto model = load_or_identity(rc, table, catalog);
        auto shared = encode_shared(model, table, catalog);
        auto expansion = read_expansions(rc.expansions, catalog);
        scenarios = service::materialize_scenarios(expansion, shared, catalog);
        opts.n_candidates = expansion.new_pairs.size();
        if (!rc.articulations.empty()) {
            require_inputs({{"articulations", rc.articulations}});
            opts.n_existing = load_articulations(rc.articulations, catalog).size();
        }
    }
    service::ReviewService svc(rc.decisions, std::move(scenarios), opts);
    httplib::Server server;
    service::bind_routes(server, svc);
    if (!rc.static_dir.empty()) {
        ARTICULATE_REQUIRE(server.set_mount_point("/ui", rc.static_dir), ErrorCode::IoError,
                           "cannot serve static files from " + rc.static_dir);
    }
    ARTICULATE_REQUIRE(server.bind_to_port(rc.host, rc.port), ErrorCode::IoError,
                       "cannot bind " + rc.host + ":" + std::to_string(rc.port));
    std::cerr << "serving " << svc.scenario_count() << " scenarios on http://" << rc.host << ":" << rc.port << "\n";
    server.listen_after_bind();
    return 0;
}

inline void print_error(std::ostream& err, const std::string& code, const std::string& detail) {
    err << nlohmann::json{{"error", code}, {"detail", detail}}.dump() << '\n';
}

} // namespace detail

/// Returns the process exit code: 0 on success, 1 on a domain failure, 2 on
/// a usage error. Failures print one JSON line to stderr.
inline int dispatch(int argc, const char* const* argv, std::ostream& err = std::cerr) {
    RunConfig rc;
    CLI::App app{"articulate: align course embeddings and propose articulations", "articulate"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kToolVersion);

    std::string format = "table";
    auto* o_seed = app.add_option("--seed", rc.seed, "seed for every randomized step")->default_val(42);
    app.add_option("--out", rc.out, "output directory")->default_val(".");
    app.add_option("--config", rc.config_path, "JSON config file; flags override it");
    auto* o_format = app.add_option("--format", format, "stdout format")->check(CLI::IsMember({"json", "table"}));

    auto add_catalog = [&](CLI::App* s) {
        s->add_option("--institutions", rc.institutions, "institutions.csv");
        s->add_option("--courses", rc.courses, "courses.csv");
    };
    auto add_embeddings = [&](CLI::App* s) {
        s->add_option("--embeddings", rc.embeddings, "embedding JSON-lines file");
        s->add_option("--dim", rc.dim, "embedding dimension");
        s->add_option("--concat", rc.concat, "second embedding file to concatenate");
        s->add_option("--concat-dim", rc.concat_dim, "dimension of --concat vectors");
    };
    // Config key -> every flag bound to it (several subcommands share knobs).
    std::multimap<std::string, CLI::Option*> flags;
    auto given = [&](const std::string& key) {
        auto [lo, hi] = flags.equal_range(key);
        return std::any_of(lo, hi, [](const auto& kv) { return kv.second->count() > 0; });
    };
    auto add_ssa = [&](CLI::App* s) {
        flags.emplace("ssa.learning_rate", s->add_option("--lr", rc.ssa.learning_rate, "SSA learning rate"));
        flags.emplace("ssa.epochs", s->add_option("--epochs", rc.ssa.epochs, "SSA epochs (0 = identity)"));
        flags.emplace("ssa.batch_size", s->add_option("--batch-size", rc.ssa.batch_size, "SSA mini-batch size"));
        flags.emplace("ssa.reorthogonalize_every",
                      s->add_option("--reorth-every", rc.ssa.reorthogonalize_every, "steps between projections"));
        flags.emplace("ssa.convergence_tol", s->add_option("--tol", rc.ssa.convergence_tol, "relative loss tolerance"));
        flags.emplace("ssa.symmetrize", s->add_flag("--symmetrize", rc.ssa.symmetrize, "also train target->source"));
    };

    auto* ingest = app.add_subcommand("ingest", "validate inputs and report counts");
    add_catalog(ingest);
    ingest->add_option("--articulations", rc.articulations, "articulations.csv");
    ingest->add_option("--enrollments", rc.enrollments, "enrollments.csv");

    auto* synth = app.add_subcommand("synth", "write a planted-alignment benchmark dataset");
    synth->add_option("--n-institutions", rc.synth.institutions)->default_val(5);
    synth->add_option("--courses-per-institution", rc.synth.courses_per_institution)->default_val(400);
    synth->add_option("--classes", rc.synth.classes)->default_val(800);
    synth->add_option("--dim", rc.synth.dim)->default_val(32);
    synth->add_option("--noise", rc.synth.noise)->default_val(0.01);
    synth->add_option("--nuisance", rc.synth.nuisance)->default_val(0.0);

    auto* c2v = app.add_subcommand("course2vec", "train skip-gram course vectors from enrollments");
    add_catalog(c2v);
    c2v->add_option("--enrollments", rc.enrollments, "enrollments.csv");
    flags.emplace("course2vec.dim", c2v->add_option("--dim", rc.c2v.dim, "vector dimension"));
    flags.emplace("course2vec.window", c2v->add_option("--window", rc.c2v.window, "context window"));
    flags.emplace("course2vec.negatives", c2v->add_option("--negatives", rc.c2v.negatives, "negative samples"));
    flags.emplace("course2vec.epochs", c2v->add_option("--epochs", rc.c2v.epochs, "passes over the corpus"));
    flags.emplace("course2vec.learning_rate", c2v->add_option("--lr", rc.c2v.learning_rate, "initial learning rate"));
    flags.emplace("course2vec.min_count", c2v->add_option("--min-count", rc.c2v.min_count, "minimum course frequency"));

    auto* train = app.add_subcommand("train", "train the per-institution alignment on all articulations");
    add_catalog(train);
    add_embeddings(train);
    train->add_option("--articulations", rc.articulations, "articulations.csv");
    add_ssa(train);

    auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validated recall@1/@5");
    add_catalog(evaluate);
    add_embeddings(evaluate);
    evaluate->add_option("--articulations", rc.articulations, "articulations.csv");
    auto* o_folds = evaluate->add_option("--folds", rc.folds, "fold count")->check(CLI::Range(2, 1000));
    add_ssa(evaluate);

    auto* threshold = app.add_subcommand("threshold", "ROC over articulations vs pseudo-negatives");
    add_catalog(threshold);
    add_embeddings(threshold);
    threshold->add_option("--articulations", rc.articulations, "articulations.csv");
    threshold->add_option("--model", rc.model, "trained model (identity when omitted)");

    auto* expand_cmd = app.add_subcommand("expand", "propose above-threshold articulations");
    add_catalog(expand_cmd);
    add_embeddings(expand_cmd);
    expand_cmd->add_option("--articulations", rc.articulations, "articulations.csv");
    expand_cmd->add_option("--model", rc.model, "trained model (identity when omitted)");
    expand_cmd->add_option("--threshold", rc.threshold, "cosine threshold");
    expand_cmd->add_option("--threshold-report", rc.threshold_report, "threshold.json to take best_threshold from");
    expand_cmd->add_option("--mode", rc.mode, "per-institution or global")->check(CLI::IsMember({"per-institution", "global"}));

    auto* disp = app.add_subcommand("dispersion", "CIP effective radius before/after alignment");
    add_catalog(disp);
    add_embeddings(disp);
    disp->add_option("--model", rc.model, "trained model (identity when omitted)");
    disp->add_option("--scope", rc.scope, "system or institutional")->check(CLI::IsMember({"system", "institutional"}));

    auto* project = app.add_subcommand("project", "project accepted articulations from an adoption rate");
    project->add_option("--candidates", rc.n_candidates, "candidate articulations")->required();
    project->add_option("--rate", rc.rate, "adoption rate in [0,1]")->required()->check(CLI::Range(0.0, 1.0));
    project->add_option("--existing", rc.n_existing, "established articulations")->required()->check(CLI::PositiveNumber);

    auto* serve = app.add_subcommand("serve", "HTTP reviewer queue");
    add_catalog(serve);
    add_embeddings(serve);
    serve->add_option("--articulations", rc.articulations, "articulations.csv (for projections)");
    serve->add_option("--model", rc.model, "trained model (identity when omitted)");
    serve->add_option("--expansions", rc.expansions, "expansions.csv written by expand");
    serve->add_option("--decisions", rc.decisions, "decision log path");
    serve->add_option("--port", rc.port, "port")->default_val(8080);
    serve->add_option("--host", rc.host, "bind address")->default_val("127.0.0.1");
    serve->add_option("--static", rc.static_dir, "directory served under /ui");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion& e) {
        std::cout << kToolVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        detail::print_error(err, "UsageError", e.what());
        return 2;
    }

    try {
        nlohmann::json config = nlohmann::json::object();
        if (!rc.config_path.empty()) {
            detail::require_inputs({{"config", rc.config_path}});
            std::ifstream in(rc.config_path);
            try {
                config = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::InvalidConfig, rc.config_path + ": " + e.what());
            }
        }
        detail::Layer layer(config);
        layer.apply(o_seed->count() > 0, "seed", rc.seed);
        layer.apply(o_format->count() > 0, "format", format);
        layer.apply(o_folds->count() > 0, "folds", rc.folds);
        layer.apply(given("ssa.learning_rate"), "learning_rate", rc.ssa.learning_rate, "ssa");
        layer.apply(given("ssa.epochs"), "epochs", rc.ssa.epochs, "ssa");
        layer.apply(given("ssa.batch_size"), "batch_size", rc.ssa.batch_size, "ssa");
        layer.apply(given("ssa.reorthogonalize_every"), "reorthogonalize_every", rc.ssa.reorthogonalize_every, "ssa");
        layer.apply(given("ssa.convergence_tol"), "convergence_tol", rc.ssa.convergence_tol, "ssa");
        layer.apply(given("ssa.symmetrize"), "symmetrize", rc.ssa.symmetrize, "ssa");
        layer.apply(given("course2vec.dim"), "dim", rc.c2v.dim, "course2vec");
        layer.apply(given("course2vec.window"), "window", rc.c2v.window, "course2vec");
        layer.apply(given("course2vec.negatives"), "negatives", rc.c2v.negatives, "course2vec");
        layer.apply(given("course2vec.epochs"), "epochs", rc.c2v.epochs, "course2vec");
        layer.apply(given("course2vec.learning_rate"), "learning_rate", rc.c2v.learning_rate, "course2vec");
        layer.apply(given("course2vec.min_count"), "min_count", rc.c2v.min_count, "course2vec");
        ARTICULATE_REQUIRE(format == "json" || format == "table", ErrorCode::UsageError, "--format must be json or table");
        rc.format = format == "json" ? ReportFormat::json : ReportFormat::table;

        const std::vector<std::pair<CLI::App*, std::function<int(const RunConfig&)>>> commands{
            {ingest, detail::run_ingest},     {synth, detail::run_synth},       {c2v, detail::run_course2vec},
            {train, detail::run_train},       {evaluate, detail::run_evaluate}, {threshold, detail::run_threshold},
            {expand_cmd, detail::run_expand}, {disp, detail::run_dispersion},   {project, detail::run_project},
            {serve, detail::run_serve}};
        for (const auto& [sub, run] : commands) {
            if (!sub->parsed()) continue;
            rc.subcommand = sub->get_name();
            return run(rc);
        }
        detail::print_error(err, "UsageError", "no subcommand given");
        return 2;
    } catch (const Error& e) {
        detail::print_error(err, std::string(to_string(e.code())), e.detail());
        return e.code() == ErrorCode::UsageError ? 2 : 1;
    } catch (const std::exception& e) {
        detail::print_error(err, "InternalError", e.what());
        return 1;
    }
}

} // namespace articulate::cli
