#include "rcdet/cli.hpp"
#include "rcdet/config.hpp"
#include "rcdet/diffgraph.hpp"
#include "rcdet/embed.hpp"
#include "rcdet/eval.hpp"
#include "rcdet/hetero2homo.hpp"
#include "rcdet/ingest.hpp"
#include "rcdet/rank.hpp"
#include "rcdet/synth.hpp"
#include "rcdet/util.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace rcdet;

namespace {

// Everything crosses the boundary as JSON text or plain containers; the
// Python side decodes with the json module.

py::tuple cli(const std::vector<std::string>& args)
{
    std::vector<std::string> argv{"rcdet"};
    argv.insert(argv.end(), args.begin(), args.end());
    std::ostringstream out, err;
    int code;
    {
        py::gil_scoped_release release;
        code = run_cli(argv, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
}

std::vector<std::string> synth(int commits, int projects, std::uint64_t seed)
{
    SynthConfig sc;
    sc.commits = commits;
    sc.projects = projects;
    sc.seed = seed;
    std::vector<std::string> out;
    for (const auto& r : synth_corpus(sc)) out.push_back(serialize_commit(r));
    return out;
}

std::string cross_validate_jsonl(const std::string& jsonl, const std::string& config_text, int jobs)
{
    auto config = parse_config(config_text);
    config.jobs = jobs;
    config.validate();
    const auto records = parse_dataset(jsonl);
    py::gil_scoped_release release;
    return render_report(cross_validate(records, config), ReportFormat::json);
}

std::pair<int, std::map<std::uint64_t, std::vector<float>>> read_embeddings(const std::string& path)
{
    auto t = read_embedding_file(path);
    return {t.dim, std::move(t.rows)};
}

void write_embeddings(const std::string& path, int dim,
                      const std::vector<std::pair<std::string, std::vector<float>>>& entries)
{
    write_embedding_file(path, make_embedding_table(dim, entries));
}

} // namespace

PYBIND11_MODULE(_rcdet, m)
{
    m.doc() = "Root-cause deletion ranking: native core";

    py::register_exception<Error>(m, "RcdetError", PyExc_ValueError);

    m.def("run_cli", &cli, py::arg("args"), "Run the rcdet command line in-process; returns (exit_code, stdout, stderr).");
    m.def("synth_corpus", &synth, py::arg("commits") = 200, py::arg("projects") = 4, py::arg("seed") = 7,
          "Synthetic commits with planted root causes, one JSON string each.");
    m.def("validate_commit", [](const std::string& j) { return validate_commit(parse_commit(j)); }, py::arg("commit_json"));
    m.def("build_graph", [](const std::string& j) { return hetero_graph_to_json(build_graph(parse_commit(j))); },
          py::arg("commit_json"), "Heterogeneous diff graph of one commit, as JSON.");
    m.def("to_homogeneous",
          [](const std::string& j, bool fill) {
              return homo_graph_to_json(to_homogeneous(hetero_graph_from_json(j), ConversionOptions{fill}));
          },
          py::arg("hetero_json"), py::arg("fill_missing") = false);
    m.def("hashed_embed",
          [](const std::string& text, int dim, std::uint64_t seed) { return HashedBagEmbedder(dim, seed).embed(text); },
          py::arg("text"), py::arg("dim") = kDefaultEmbeddingDim, py::arg("seed") = 0);
    m.def("fnv1a64", [](const std::string& s) { return fnv1a64(s); }, py::arg("text"));
    m.def("read_embedding_file", &read_embeddings, py::arg("path"), "Returns (dim, {key: vector}).");
    m.def("write_embedding_file", &write_embeddings, py::arg("path"), py::arg("dim"), py::arg("entries"),
          "entries: list of (text, vector) pairs.");
    m.def("cross_validate", &cross_validate_jsonl, py::arg("jsonl"), py::arg("config") = "", py::arg("jobs") = 1,
          "k-fold cross-validation over a JSONL corpus; returns the JSON report.");
    m.def("render_report",
          [](const std::string& report_json, const std::string& format) {
              return render_report(report_from_json(report_json), report_format_from_string(format));
          },
          py::arg("report_json"), py::arg("format") = "text");
    m.def("recall_at_n", py::overload_cast<const std::vector<std::size_t>&, int>(&recall_at_n), py::arg("first_ranks"),
          py::arg("n"));
    m.def("mean_first_rank", py::overload_cast<const std::vector<std::size_t>&>(&mean_first_rank),
          py::arg("first_ranks"));
    m.def("pair_probability", &pair_probability, py::arg("s_i"), py::arg("s_j"));
    m.def("focal_loss", &focal_loss, py::arg("p"), py::arg("t"), py::arg("alpha"), py::arg("gamma"));
    m.def("bce_loss", &bce_loss, py::arg("p"), py::arg("t"));
}
