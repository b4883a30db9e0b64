#include "rcdet/config.hpp"

#include "rcdet/util.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace rcdet {

namespace {

int to_int(const std::string& key, const std::string& v)
{
    int out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw Error("config: '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw Error("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
    return out;
}

double to_double(const std::string& key, const std::string& v)
{
    // strtod rather than from_chars: gcc 11 lacks the floating overloads.
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) throw Error("config: '" + key + "' expects a number, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw Error("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::string fmt(double v)
{
    // shortest form that reads back exactly
    char buf[40];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string join_decompositions(const ModelConfig& m)
{
    std::string out;
    for (int l = 0; l < m.layers; ++l) {
        if (l) out += "&";
        out += to_string(m.decompositions.empty() ? DecompositionKind::basis : m.decompositions[static_cast<std::size_t>(l)]);
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"dim", [](RunConfig& c, const auto& k, const auto& v) { c.model.input_dim = to_int(k, v); }},
        {"hidden_dim", [](RunConfig& c, const auto& k, const auto& v) { c.model.hidden_dim = to_int(k, v); }},
        {"layers", [](RunConfig& c, const auto& k, const auto& v) { c.model.layers = to_int(k, v); }},
        {"decomposition",
         [](RunConfig& c, const auto&, const auto& v) {
             c.model.decompositions.clear();
             c.model.decompositions.push_back(decomposition_from_string(v));
         }},
        {"decompositions",
         [](RunConfig& c, const auto&, const auto& v) {
             c.model.decompositions.clear();
             std::string item;
             std::string list = v;
             std::replace(list.begin(), list.end(), '&', ',');
             std::stringstream ss(list);
             while (std::getline(ss, item, ',')) c.model.decompositions.push_back(decomposition_from_string(trim(item)));
         }},
        {"num_bases", [](RunConfig& c, const auto& k, const auto& v) { c.model.num_bases = to_int(k, v); }},
        {"num_blocks", [](RunConfig& c, const auto& k, const auto& v) { c.model.num_blocks = to_int(k, v); }},
        {"loss", [](RunConfig& c, const auto&, const auto& v) { c.loss.kind = loss_from_string(v); }},
        {"alpha", [](RunConfig& c, const auto& k, const auto& v) { c.loss.alpha = to_double(k, v); }},
        {"gamma", [](RunConfig& c, const auto& k, const auto& v) { c.loss.gamma = to_double(k, v); }},
        {"pos_weight", [](RunConfig& c, const auto& k, const auto& v) { c.loss.pos_weight = to_double(k, v); }},
        {"lr", [](RunConfig& c, const auto& k, const auto& v) { c.train.lr = to_double(k, v); }},
        {"epochs", [](RunConfig& c, const auto& k, const auto& v) { c.train.epochs = to_int(k, v); }},
        {"pair_batch", [](RunConfig& c, const auto& k, const auto& v) { c.train.pair_batch = to_int(k, v); }},
        {"k", [](RunConfig& c, const auto& k, const auto& v) { c.k = to_int(k, v); }},
        {"seed", [](RunConfig& c, const auto& k, const auto& v) { c.seed = to_u64(k, v); }},
        {"embedder", [](RunConfig& c, const auto&, const auto& v) { c.embedder = v; }},
        {"embedder_fallback", [](RunConfig& c, const auto&, const auto& v) { c.embedder_fallback = v; }},
        {"fill_missing", [](RunConfig& c, const auto& k, const auto& v) { c.fill_missing = to_bool(k, v); }},
        {"method", [](RunConfig& c, const auto&, const auto& v) { c.method = v; }},
    };
    return table;
}

} // namespace

void RunConfig::validate() const
{
    if (model.input_dim < 8) throw Error("config: dim must be >= 8");
    if (model.hidden_dim < 1) throw Error("config: hidden_dim must be >= 1");
    if (model.layers < 1 || model.layers > 5) throw Error("config: layers must be in [1, 5]");
    if (model.decompositions.size() > 1 && static_cast<int>(model.decompositions.size()) != model.layers) {
        throw Error("config: decompositions lists " + std::to_string(model.decompositions.size()) + " entries for "
                    + std::to_string(model.layers) + " layers");
    }
    if (model.num_bases < 1 || model.num_blocks < 1) throw Error("config: num_bases and num_blocks must be >= 1");
    train.validate();
    loss.validate();
    if (k < 2) throw Error("config: k must be >= 2");
    if (embedder != "hashed" && embedder.rfind("file:", 0) != 0) {
        throw Error("config: embedder must be 'hashed' or 'file:<path>', got '" + embedder + "'");
    }
    if (embedder_fallback != "none" && embedder_fallback != "hashed") {
        throw Error("config: embedder_fallback must be 'none' or 'hashed'");
    }
    if (method.empty() || method.find_first_of(",\n\"") != std::string::npos) {
        throw Error("config: method label must be non-empty without commas or quotes");
    }
    if (jobs < 1) throw Error("config: jobs must be >= 1");
}

RunConfig parse_config(const std::string& text, RunConfig base)
{
    RunConfig c = std::move(base);
    int line_no = 0;
    for (const auto& raw : split_lines(text)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw Error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        const auto it = setters().find(key);
        if (it == setters().end()) throw Error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        try {
            it->second(c, key, value);
        } catch (const Error& e) {
            throw Error("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    // A single decomposition applies to every layer.
    if (c.model.decompositions.size() == 1 && c.model.layers > 1) {
        c.model.decompositions.assign(static_cast<std::size_t>(c.model.layers), c.model.decompositions.front());
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path, RunConfig base)
{
    return parse_config(read_file(path), std::move(base));
}

std::string echo_config(const RunConfig& c)
{
    std::ostringstream out;
    out << "dim = " << c.model.input_dim << "\n"
        << "hidden_dim = " << c.model.hidden_dim << "\n"
        << "layers = " << c.model.layers << "\n"
        << "decompositions = " << join_decompositions(c.model) << "\n"
        << "num_bases = " << c.model.num_bases << "\n"
        << "num_blocks = " << c.model.num_blocks << "\n"
        << "loss = " << to_string(c.loss.kind) << "\n"
        << "alpha = " << fmt(c.loss.alpha) << "\n"
        << "gamma = " << fmt(c.loss.gamma) << "\n"
        << "pos_weight = " << fmt(c.loss.pos_weight) << "\n"
        << "lr = " << fmt(c.train.lr) << "\n"
        << "epochs = " << c.train.epochs << "\n"
        << "pair_batch = " << c.train.pair_batch << "\n"
        << "k = " << c.k << "\n"
        << "seed = " << c.seed << "\n"
        << "embedder = " << c.embedder << "\n"
        << "embedder_fallback = " << c.embedder_fallback << "\n"
        << "fill_missing = " << (c.fill_missing ? "true" : "false") << "\n"
        << "method = " << c.method << "\n";
    return out.str();
}

std::shared_ptr<const Embedder> make_embedder(const RunConfig& c)
{
    std::shared_ptr<const Embedder> hashed = std::make_shared<HashedBagEmbedder>(c.model.input_dim, 0);
    if (c.embedder == "hashed") return hashed;
    if (c.embedder.rfind("file:", 0) == 0) {
        auto e = file_embedder(c.embedder.substr(5), c.embedder_fallback == "hashed" ? hashed : nullptr);
        if (e->dim() != c.model.input_dim) {
            throw Error("embedding file dim " + std::to_string(e->dim()) + " does not match config dim "
                        + std::to_string(c.model.input_dim));
        }
        return e;
    }
    throw Error("config: unknown embedder '" + c.embedder + "'");
}

std::string embedder_spec(const RunConfig& c)
{
    return c.embedder + ";fallback=" + c.embedder_fallback + ";dim=" + std::to_string(c.model.input_dim);
}

void apply_embedder_spec(RunConfig& c, const std::string& spec)
{
    const auto a = spec.find(";fallback=");
    const auto b = spec.find(";dim=");
    if (a == std::string::npos || b == std::string::npos || b < a) throw Error("checkpoint: malformed embedder spec '" + spec + "'");
    c.embedder = spec.substr(0, a);
    c.embedder_fallback = spec.substr(a + 10, b - a - 10);
    c.model.input_dim = to_int("dim", spec.substr(b + 5));
}

} // namespace rcdet
