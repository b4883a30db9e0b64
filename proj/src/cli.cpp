#include "rcdet/cli.hpp"

#include "rcdet/config.hpp"
#include "rcdet/diffgraph.hpp"
#include "rcdet/eval.hpp"
#include "rcdet/hetero2homo.hpp"
#include "rcdet/ingest.hpp"
#include "rcdet/rank.hpp"
#include "rcdet/synth.hpp"
#include "rcdet/util.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <ostream>
#include <thread>

namespace fs = std::filesystem;

namespace rcdet {

namespace {

struct Options {
    std::string dataset;
    std::string out;
    std::string config;
    std::string checkpoint;
    std::string input;
    std::string format = "text";
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 1;
    bool sweep = false;
    int commits = 200;
    int projects = 4;
};

RunConfig resolve_config(const Options& o)
{
    RunConfig c;
    if (!o.config.empty()) c = load_config(o.config);
    if (o.seed_given) c.seed = o.seed;
    c.jobs = o.jobs;
    c.validate();
    return c;
}

void need(const std::string& value, const char* flag)
{
    if (value.empty()) throw Error(std::string("missing required option ") + flag);
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());
}

std::string file_stem(const std::string& commit_id)
{
    std::string s;
    for (char c : commit_id) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
    return s;
}

void warn_all(const std::vector<std::string>& warnings, std::ostream& err)
{
    for (const auto& w : warnings) err << "warning: " << w << "\n";
}

int cmd_build_graphs(const Options& o, std::ostream& out, std::ostream& err)
{
    need(o.dataset, "--dataset");
    need(o.out, "--out");
    const auto config = resolve_config(o);
    std::vector<std::string> warnings;
    const auto records = load_dataset(o.dataset, &warnings);
    warn_all(warnings, err);
    ensure_dir(o.out);

    std::vector<std::string> hetero(records.size()), homo(records.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex m;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < records.size();) {
            try {
                const auto g = build_graph(records[i]);
                hetero[i] = hetero_graph_to_json(g);
                homo[i] = homo_graph_to_json(to_homogeneous(g, ConversionOptions{config.fill_missing}));
            } catch (...) {
                std::lock_guard lock(m);
                if (!failure) failure = std::current_exception();
                next = records.size();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::min<int>(o.jobs, static_cast<int>(records.size())); ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto stem = (fs::path(o.out) / file_stem(records[i].commit_id)).string();
        write_file(stem + ".hetero.json", hetero[i]);
        write_file(stem + ".homo.json", homo[i]);
    }
    write_file((fs::path(o.out) / "config.txt").string(), echo_config(config));
    out << "built " << records.size() << " graphs into " << o.out << "\n";
    return 0;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err)
{
    need(o.dataset, "--dataset");
    need(o.out, "--out");
    const auto config = resolve_config(o);
    std::vector<std::string> warnings;
    const auto records = load_dataset(o.dataset, &warnings);
    warn_all(warnings, err);
    ensure_dir(o.out);

    const auto samples = build_samples(records, config);
    Ranker ranker = init_ranker(config.model, config.seed);
    ranker.embedder = embedder_spec(config);
    TrainConfig tc = config.train;
    tc.seed = config.seed;
    const auto result = train(ranker, samples, tc, config.loss);
    warn_all(result.warnings, err);

    write_file((fs::path(o.out) / "checkpoint.json").string(), save_checkpoint(ranker));
    write_file((fs::path(o.out) / "train_log.csv").string(), history_csv(result.history));
    write_file((fs::path(o.out) / "config.txt").string(), echo_config(config));
    out << echo_config(config);
    out << "trained on " << result.pairs << " pairs; final mean loss " << result.history.back().mean_loss << "\n";
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err)
{
    need(o.dataset, "--dataset");
    const auto config = resolve_config(o);
    const auto format = report_format_from_string(o.format);
    std::vector<std::string> warnings;
    const auto records = load_dataset(o.dataset, &warnings);
    warn_all(warnings, err);

    if (o.sweep) {
        const auto csv = render_sweep_csv(sweep(records, config));
        if (!o.out.empty()) {
            ensure_dir(o.out);
            write_file((fs::path(o.out) / "sweep.csv").string(), csv);
            write_file((fs::path(o.out) / "config.txt").string(), echo_config(config));
        }
        out << csv;
        return 0;
    }
    const auto report = cross_validate(records, config);
    const auto rendered = render_report(report, format);
    if (!o.out.empty()) {
        ensure_dir(o.out);
        write_file((fs::path(o.out) / "report.json").string(), render_report(report, ReportFormat::json));
        write_file((fs::path(o.out) / ("report." + o.format)).string(), rendered);
        write_file((fs::path(o.out) / "config.txt").string(), echo_config(config));
    }
    out << rendered;
    return 0;
}

int cmd_rank(const Options& o, std::ostream& out, std::ostream& err)
{
    need(o.checkpoint, "--checkpoint");
    const std::string commit_path = !o.input.empty() ? o.input : o.dataset;
    need(commit_path, "<commit.json>");
    if (!fs::exists(o.checkpoint)) throw Error("checkpoint '" + o.checkpoint + "' does not exist");
    const auto ranker = load_checkpoint(read_file(o.checkpoint));
    RunConfig config;
    apply_embedder_spec(config, ranker.embedder);
    const auto embedder = make_embedder(config);

    const auto record = parse_commit(std::string(trim(read_file(commit_path))));
    warn_all(validate_commit(record), err);
    const auto sample = make_sample(build_graph(record), *embedder);
    const auto ranking = rank_deletions(ranker, sample);
    char buf[64];
    for (std::size_t k = 0; k < ranking.lines.size(); ++k) {
        const auto& l = ranking.lines[k];
        std::snprintf(buf, sizeof buf, "%.9g", l.score);
        out << (k + 1) << " " << l.line_no << " " << l.path << " " << buf << "\n";
    }
    return 0;
}

int cmd_report(const Options& o, std::ostream& out)
{
    const std::string path = !o.input.empty() ? o.input : (fs::path(o.out) / "report.json").string();
    if (o.input.empty()) need(o.out, "<report.json> or --out");
    out << render_report(report_from_json(read_file(path)), report_format_from_string(o.format));
    return 0;
}

int cmd_synth(const Options& o, std::ostream& out)
{
    need(o.out, "--out");
    SynthConfig sc;
    sc.commits = o.commits;
    sc.projects = o.projects;
    if (o.seed_given) sc.seed = o.seed;
    const auto records = synth_corpus(sc);
    save_dataset(o.out, records);
    out << "wrote " << records.size() << " synthetic commits to " << o.out << "\n";
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Root-cause deletion ranking for bug-fixing commits"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "key=value configuration file");
        sub->add_option("--seed", o.seed, "override the configured seed")->each([&](const std::string&) { o.seed_given = true; });
        sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    };

    auto* build = app.add_subcommand("build-graphs", "build and serialize per-commit graphs");
    build->add_option("--dataset", o.dataset, "JSONL commit corpus");
    build->add_option("--out", o.out, "output directory");
    common(build);

    auto* train_cmd = app.add_subcommand("train", "train a ranker on a whole corpus");
    train_cmd->add_option("--dataset", o.dataset, "JSONL commit corpus");
    train_cmd->add_option("--out", o.out, "output directory for checkpoint.json, train_log.csv, config.txt");
    common(train_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "stratified k-fold cross-validation");
    eval_cmd->add_option("--dataset", o.dataset, "JSONL commit corpus");
    eval_cmd->add_option("--out", o.out, "output directory for the report");
    eval_cmd->add_option("--format", o.format, "text, csv or json");
    eval_cmd->add_flag("--sweep", o.sweep, "run the layers x decomposition x loss sweep");
    common(eval_cmd);

    auto* rank_cmd = app.add_subcommand("rank", "rank the deleted lines of one commit");
    rank_cmd->add_option("commit", o.input, "single-commit JSON file");
    rank_cmd->add_option("--dataset", o.dataset, "single-commit JSON file (alternative to the positional)");
    rank_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint.json from train");

    auto* report_cmd = app.add_subcommand("report", "render a saved report");
    report_cmd->add_option("report", o.input, "report.json");
    report_cmd->add_option("--out", o.out, "directory holding report.json");
    report_cmd->add_option("--format", o.format, "text, csv or json");

    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic corpus with planted root causes");
    synth_cmd->add_option("--out", o.out, "output JSONL path");
    synth_cmd->add_option("--commits", o.commits, "number of commits");
    synth_cmd->add_option("--projects", o.projects, "number of projects");
    synth_cmd->add_option("--seed", o.seed, "generator seed")->each([&](const std::string&) { o.seed_given = true; });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back(); // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (build->parsed()) return cmd_build_graphs(o, out, err);
        if (train_cmd->parsed()) return cmd_train(o, out, err);
        if (eval_cmd->parsed()) return cmd_eval(o, out, err);
        if (rank_cmd->parsed()) return cmd_rank(o, out, err);
        if (report_cmd->parsed()) return cmd_report(o, out);
        if (synth_cmd->parsed()) return cmd_synth(o, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

} // namespace rcdet
