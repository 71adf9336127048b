#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vsematch/embedding.hpp"
#include "vsematch/train.hpp"

namespace vsematch {

// EMB1 container: one ASCII header line "EMB1 <rows> <dim> <f32|f64>\n"
// followed by raw little-endian row-major values.
enum class EmbPrecision { f32, f64 };

void write_emb1(const std::filesystem::path& path, const Matrix& m,
                EmbPrecision precision = EmbPrecision::f64);
Matrix read_emb1(const std::filesystem::path& path);

// Reads an EMB1 file into a set with row-number ids; rejects non-finite
// entries.
EmbeddingSet read_embedding_set(const std::filesystem::path& path);

// Pairs file: one "query_id<TAB>item_id" line per positive pair.
void write_pairs(const std::filesystem::path& path, const PairIndex& pairs,
                 std::span<const std::string> query_ids,
                 std::span<const std::string> item_ids);
PairIndex read_pairs(const std::filesystem::path& path, const EmbeddingSet& queries,
                     const EmbeddingSet& items);

// History file: one "epoch<TAB>loss<TAB>lr" line per epoch.
void write_history(const std::filesystem::path& path, std::span<const double> losses,
                   const TrainConfig& cfg);

// Encoder file: weight then bias, each as an EMB1 section in one file.
void save_encoder(const std::filesystem::path& path, const ToyEncoder& enc);
ToyEncoder load_encoder(const std::filesystem::path& path);

// Shortest representation that round-trips the exact double (what the JSON
// reports use); shared so TSV output carries identical numbers.
std::string number_repr(double x);

// Writes via a temporary file and renames into place.
void atomic_write(const std::filesystem::path& path, const std::string& contents);

}  // namespace vsematch
