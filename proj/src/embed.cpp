#include "rcdet/embed.hpp"

#include "rcdet/analyzer.hpp"
#include "rcdet/util.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace rcdet {

HashedBagEmbedder::HashedBagEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed)
{
    if (dim < 8) throw Error("hashed embedder: dim must be >= 8 (got " + std::to_string(dim) + ")");
}

std::string HashedBagEmbedder::name() const
{
    return "hashed:" + std::to_string(dim_) + ":" + std::to_string(seed_);
}

std::vector<float> HashedBagEmbedder::embed(std::string_view text) const
{
    std::vector<double> acc(static_cast<std::size_t>(dim_), 0.0);
    const std::uint64_t salt = mix64(seed_);
    for (const auto& token : normalized_tokens(text)) {
        const std::uint64_t h = mix64(fnv1a64(token) ^ salt);
        const auto bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim_));
        const double sign = (mix64(h) >> 63) != 0 ? -1.0 : 1.0;
        acc[bucket] += sign;
    }
    double norm = 0.0;
    for (double v : acc) norm += v * v;
    std::vector<float> out(acc.size(), 0.0f);
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < acc.size(); ++i) out[i] = static_cast<float>(acc[i] / norm);
    }
    return out;
}

namespace {

template <typename T>
void put_le(std::string& out, T value)
{
    using U = std::make_unsigned_t<T>;
    const auto bits = static_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

template <typename T>
T get_le(std::string_view bytes, std::size_t& pos)
{
    if (pos + sizeof(T) > bytes.size()) throw Error("embedding file: truncated");
    std::make_unsigned_t<T> bits = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) {
        bits |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
    }
    pos += sizeof(T);
    return static_cast<T>(bits);
}

} // namespace

EmbeddingTable parse_embedding_file(std::string_view bytes)
{
    if (bytes.size() < 20 || bytes.substr(0, 4) != "RCEM") throw Error("embedding file: bad magic");
    std::size_t pos = 4;
    const auto version = get_le<std::uint32_t>(bytes, pos);
    if (version != kEmbeddingFileVersion) {
        throw Error("embedding file: unsupported version " + std::to_string(version));
    }
    const auto dim = get_le<std::uint32_t>(bytes, pos);
    const auto count = get_le<std::uint64_t>(bytes, pos);
    if (dim == 0) throw Error("embedding file: dim is 0");
    const std::uint64_t record = 8 + 4ULL * dim;
    if ((bytes.size() - pos) / record < count || bytes.size() - pos != count * record) {
        throw Error("embedding file: size does not match header (dim " + std::to_string(dim) + ", count "
                    + std::to_string(count) + ")");
    }
    EmbeddingTable t;
    t.dim = static_cast<int>(dim);
    std::uint64_t prev = 0;
    for (std::uint64_t r = 0; r < count; ++r) {
        const auto key = get_le<std::uint64_t>(bytes, pos);
        if (r > 0 && key <= prev) throw Error("embedding file: keys are not strictly increasing");
        prev = key;
        std::vector<float> v(dim);
        for (auto& x : v) x = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
        t.rows.emplace(key, std::move(v));
    }
    return t;
}

EmbeddingTable read_embedding_file(const std::string& path)
{
    return parse_embedding_file(read_file(path));
}

EmbeddingTable make_embedding_table(int dim, const std::vector<std::pair<std::string, std::vector<float>>>& entries)
{
    if (dim < 1) throw Error("embedding table: dim must be >= 1");
    EmbeddingTable t;
    t.dim = dim;
    std::map<std::uint64_t, std::string> owner;
    for (const auto& [text, vec] : entries) {
        if (static_cast<int>(vec.size()) != dim) {
            throw Error("embedding table: vector for '" + text + "' has " + std::to_string(vec.size())
                        + " values, expected " + std::to_string(dim));
        }
        const auto key = fnv1a64(text);
        auto [it, inserted] = owner.emplace(key, text);
        if (!inserted) {
            if (it->second != text) {
                throw Error("embedding table: hash collision between '" + it->second + "' and '" + text + "'");
            }
            continue;
        }
        t.rows.emplace(key, vec);
    }
    return t;
}

std::string serialize_embedding_table(const EmbeddingTable& table)
{
    std::string out = "RCEM";
    put_le<std::uint32_t>(out, kEmbeddingFileVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(table.dim));
    put_le<std::uint64_t>(out, table.rows.size());
    for (const auto& [key, vec] : table.rows) {
        put_le<std::uint64_t>(out, key);
        for (float x : vec) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(x));
    }
    return out;
}

void write_embedding_file(const std::string& path, const EmbeddingTable& table)
{
    write_file(path, serialize_embedding_table(table));
}

FileEmbedder::FileEmbedder(EmbeddingTable table, std::shared_ptr<const Embedder> fallback, std::string source)
    : table_(std::move(table)), fallback_(std::move(fallback)), source_(std::move(source))
{
    if (fallback_ && fallback_->dim() != table_.dim) {
        throw Error("file embedder: fallback dim " + std::to_string(fallback_->dim())
                    + " does not match file dim " + std::to_string(table_.dim));
    }
}

std::string FileEmbedder::name() const
{
    return "file:" + source_;
}

std::vector<float> FileEmbedder::embed(std::string_view text) const
{
    if (const auto it = table_.rows.find(fnv1a64(text)); it != table_.rows.end()) return it->second;
    if (fallback_) return fallback_->embed(text);
    throw Error("file embedder: no vector for line text '" + std::string(text) + "'");
}

std::shared_ptr<const Embedder> file_embedder(const std::string& path, std::shared_ptr<const Embedder> fallback)
{
    return std::make_shared<FileEmbedder>(read_embedding_file(path), std::move(fallback), path);
}

HomoGraph embed_graph(const HomoGraph& g, const Embedder& e)
{
    const auto it = g.node_features.find("text");
    if (it == g.node_features.end() || it->second.dtype() != DType::text) {
        throw Error("embed_graph: graph '" + g.commit_id + "' carries no node text");
    }
    const auto& texts = std::get<std::vector<std::string>>(it->second.data);
    const int dim = e.dim();
    std::vector<float> values;
    values.reserve(texts.size() * static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto v = e.embed(texts[i]);
        if (static_cast<int>(v.size()) != dim) throw Error("embed_graph: embedder returned a vector of wrong size");
        for (float x : v) {
            if (!std::isfinite(x)) {
                throw Error("embed_graph: non-finite value in row " + std::to_string(i) + " of graph '" + g.commit_id + "'");
            }
        }
        values.insert(values.end(), v.begin(), v.end());
    }
    HomoGraph out = g;
    out.node_features.clear();
    out.node_features.emplace(kEmbeddingKey, FeatureColumn::floats(dim, std::move(values)));
    return out;
}

} // namespace rcdet
