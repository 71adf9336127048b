#include "vsematch/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace vsematch {

namespace {

static_assert(sizeof(float) == 4 && sizeof(double) == 8);

template <typename T>
void append_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(bytes), std::end(bytes));
  out.append(bytes, sizeof(T));
}

template <typename T>
T read_le(const char* bytes) {
  char buf[sizeof(T)];
  std::memcpy(buf, bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(std::begin(buf), std::end(buf));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in.good() && !in.eof()) throw IoError("read failed for " + path.string());
  return std::move(ss).str();
}

// Parses one EMB1 section starting at `offset`; advances it past the data.
Matrix parse_emb1(const std::string& blob, std::size_t& offset, const std::filesystem::path& path) {
  const std::size_t eol = blob.find('\n', offset);
  if (eol == std::string::npos) throw IoError(path.string() + ": missing EMB1 header line");
  std::istringstream header(blob.substr(offset, eol - offset));
  std::string magic, type;
  long long rows = 0, dim = 0;
  if (!(header >> magic >> rows >> dim >> type) || magic != "EMB1" || rows < 1 || dim < 1 ||
      (type != "f32" && type != "f64"))
    throw IoError(path.string() + ": malformed EMB1 header");
  const std::size_t value_size = type == "f32" ? 4 : 8;
  const std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(dim);
  offset = eol + 1;
  if (blob.size() - offset < count * value_size)
    throw IoError(path.string() + ": truncated EMB1 payload");
  Matrix m(rows, dim);
  const char* p = blob.data() + offset;
  for (std::size_t i = 0; i < count; ++i) {
    m.data()[i] = type == "f32" ? static_cast<double>(read_le<float>(p + 4 * i))
                                : read_le<double>(p + 8 * i);
  }
  offset += count * value_size;
  return m;
}

std::string emb1_blob(const Matrix& m, EmbPrecision precision) {
  std::string out = "EMB1 " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) +
                    (precision == EmbPrecision::f32 ? " f32\n" : " f64\n");
  const std::size_t count = static_cast<std::size_t>(m.size());
  out.reserve(out.size() + count * (precision == EmbPrecision::f32 ? 4 : 8));
  for (std::size_t i = 0; i < count; ++i) {
    if (precision == EmbPrecision::f32)
      append_le(out, static_cast<float>(m.data()[i]));
    else
      append_le(out, m.data()[i]);
  }
  return out;
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out.good()) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

void write_emb1(const std::filesystem::path& path, const Matrix& m, EmbPrecision precision) {
  if (m.rows() < 1 || m.cols() < 1) throw IoError("refusing to write an empty embedding matrix");
  atomic_write(path, emb1_blob(m, precision));
}

Matrix read_emb1(const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  std::size_t offset = 0;
  Matrix m = parse_emb1(blob, offset, path);
  if (offset != blob.size()) throw IoError(path.string() + ": trailing bytes after EMB1 payload");
  return m;
}

EmbeddingSet read_embedding_set(const std::filesystem::path& path) {
  Matrix m = read_emb1(path);
  if (!m.allFinite()) throw IoError(path.string() + ": non-finite embedding values");
  return EmbeddingSet::from_matrix(std::move(m));
}

void write_pairs(const std::filesystem::path& path, const PairIndex& pairs,
                 std::span<const std::string> query_ids, std::span<const std::string> item_ids) {
  std::string out;
  for (Index q = 0; q < pairs.n_queries(); ++q)
    for (int i : pairs.positives(q))
      out += query_ids[static_cast<std::size_t>(q)] + "\t" + item_ids[static_cast<std::size_t>(i)] + "\n";
  atomic_write(path, out);
}

PairIndex read_pairs(const std::filesystem::path& path, const EmbeddingSet& queries,
                     const EmbeddingSet& items) {
  std::unordered_map<std::string, int> qid, iid;
  for (std::size_t r = 0; r < queries.ids.size(); ++r) qid[queries.ids[r]] = static_cast<int>(r);
  for (std::size_t r = 0; r < items.ids.size(); ++r) iid[items.ids[r]] = static_cast<int>(r);

  std::istringstream in(read_file(path));
  std::vector<std::vector<int>> positives(static_cast<std::size_t>(queries.rows()));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected query<TAB>item");
    const std::string q = line.substr(0, tab);
    const std::string i = line.substr(tab + 1);
    const auto qit = qid.find(q);
    const auto iit = iid.find(i);
    if (qit == qid.end())
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": unknown query id '" + q + "'");
    if (iit == iid.end())
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": unknown item id '" + i + "'");
    positives[static_cast<std::size_t>(qit->second)].push_back(iit->second);
  }
  return PairIndex(std::move(positives), items.rows());
}

void write_history(const std::filesystem::path& path, std::span<const double> losses,
                   const TrainConfig& cfg) {
  std::string out;
  for (std::size_t e = 0; e < losses.size(); ++e) {
    out += std::to_string(e) + "\t" + number_repr(losses[e]) + "\t" +
           number_repr(effective_lr(cfg, static_cast<int>(e))) + "\n";
  }
  atomic_write(path, out);
}

void save_encoder(const std::filesystem::path& path, const ToyEncoder& enc) {
  Matrix bias(1, enc.bias.cols());
  bias.row(0) = enc.bias;
  atomic_write(path, emb1_blob(enc.weight, EmbPrecision::f64) + emb1_blob(bias, EmbPrecision::f64));
}

ToyEncoder load_encoder(const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  std::size_t offset = 0;
  ToyEncoder enc;
  enc.weight = parse_emb1(blob, offset, path);
  const Matrix bias = parse_emb1(blob, offset, path);
  if (offset != blob.size()) throw IoError(path.string() + ": trailing bytes after encoder data");
  if (bias.rows() != 1 || bias.cols() != enc.weight.cols())
    throw IoError(path.string() + ": bias shape does not match the weight matrix");
  enc.bias = bias.row(0);
  if (!enc.weight.allFinite() || !enc.bias.allFinite())
    throw IoError(path.string() + ": non-finite encoder parameters");
  return enc;
}

std::string number_repr(double x) {
  return nlohmann::json(x).dump();
}

}  // namespace vsematch
