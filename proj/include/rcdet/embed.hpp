#pragma once

// Node embedding: line text -> fixed-length float vector.

#include "rcdet/hetero2homo.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace rcdet {

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual std::vector<float> embed(std::string_view text) const = 0;
};

inline constexpr int kDefaultEmbeddingDim = 128;

/// Signed feature hashing over analyzer tokens, L2-normalized.
class HashedBagEmbedder final : public Embedder {
public:
    HashedBagEmbedder(int dim, std::uint64_t seed);

    std::string name() const override;
    int dim() const override { return dim_; }
    std::vector<float> embed(std::string_view text) const override;

private:
    int dim_;
    std::uint64_t seed_;
};

// EmbeddingFile: "RCEM", u32 version, u32 dim, u64 count, then count records
// of (u64 FNV-1a key of the UTF-8 text, dim x f32), keys strictly
// increasing, everything little-endian.
inline constexpr std::uint32_t kEmbeddingFileVersion = 1;

struct EmbeddingTable {
    int dim = 0;
    std::map<std::uint64_t, std::vector<float>> rows;
};

EmbeddingTable read_embedding_file(const std::string& path);
EmbeddingTable parse_embedding_file(std::string_view bytes);

/// Builds the table from (text, vector) pairs, dropping exact duplicates.
/// Two distinct texts with one key are a hard error.
EmbeddingTable make_embedding_table(int dim, const std::vector<std::pair<std::string, std::vector<float>>>& entries);
std::string serialize_embedding_table(const EmbeddingTable& table);
void write_embedding_file(const std::string& path, const EmbeddingTable& table);

class FileEmbedder final : public Embedder {
public:
    /// `fallback` (may be null) answers texts missing from the file; its
    /// dimension must match.
    explicit FileEmbedder(EmbeddingTable table, std::shared_ptr<const Embedder> fallback = nullptr,
                          std::string source = {});

    std::string name() const override;
    int dim() const override { return table_.dim; }
    std::vector<float> embed(std::string_view text) const override;

private:
    EmbeddingTable table_;
    std::shared_ptr<const Embedder> fallback_;
    std::string source_;
};

std::shared_ptr<const Embedder> file_embedder(const std::string& path,
                                              std::shared_ptr<const Embedder> fallback = nullptr);

inline constexpr const char* kEmbeddingKey = "embedding";

/// Replaces the node features with one float block "embedding" of width
/// `e.dim()`, row i = e.embed(text_i). Non-finite values are an error.
HomoGraph embed_graph(const HomoGraph& g, const Embedder& e);

} // namespace rcdet
