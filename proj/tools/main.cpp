// Command-line front end: synthesize -> train -> evaluate/diagnose.
//
// Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric divergence, 5 shape
// mismatch.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vsematch/inference.hpp"
#include "vsematch/io.hpp"
#include "vsematch/losses.hpp"
#include "vsematch/metrics.hpp"
#include "vsematch/train.hpp"

namespace {

using nlohmann::ordered_json;
using namespace vsematch;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitShape = 5;

struct SynthArgs {
  SyntheticSpec spec;
  std::string queries_out = "queries.emb";
  std::string items_out = "items.emb";
  std::string pairs_out = "pairs.tsv";
  bool f32 = false;
};

struct TrainArgs {
  std::string queries_in, items_in;
  TrainConfig cfg;
  std::string loss_name = "sum";
  std::string query_encoder_out = "query_encoder.enc";
  std::string item_encoder_out = "item_encoder.enc";
  std::string history_out = "history.tsv";
};

struct EvalArgs {
  std::string queries_in, items_in;
  std::string pairs_in;
  std::string query_encoder_in, item_encoder_in;
  std::string inference_name = "naive";
  InferenceConfig cfg;
  int folds = 1;
  std::string format = "json";
  std::string out;
  bool diagnose = false;
};

LossKind parse_loss(const std::string& name) {
  if (name == "sum") return LossKind::sum_margin;
  if (name == "max") return LossKind::max_margin;
  if (name == "knn") return LossKind::knn_margin;
  throw CLI::ValidationError("--loss", "must be one of sum|max|knn");
}

Strategy parse_strategy(const std::string& name) {
  if (name == "naive") return Strategy::naive;
  if (name == "is") return Strategy::inverted_softmax;
  if (name == "csls") return Strategy::csls;
  if (name == "hungarian") return Strategy::hungarian;
  throw CLI::ValidationError("--inference", "must be one of naive|is|csls|hungarian");
}

int run_synth(const SynthArgs& a) {
  const SyntheticData data = generate_synthetic(a.spec);
  const EmbPrecision prec = a.f32 ? EmbPrecision::f32 : EmbPrecision::f64;
  write_emb1(a.queries_out, data.queries.data, prec);
  write_emb1(a.items_out, data.items.data, prec);
  // One line per generated pair; same-class items are exchangeable, so the
  // aligned pairing is the canonical ground truth on disk.
  PairIndex diag = PairIndex::diagonal(data.queries.rows());
  write_pairs(a.pairs_out, diag, data.queries.ids, data.items.ids);

  std::cout << "synth classes=" << a.spec.n_classes << " per-class=" << a.spec.samples_per_class
            << " query-dim=" << a.spec.d_raw_query << " item-dim=" << a.spec.d_raw_item
            << " noise-sigma=" << a.spec.noise_sigma << " hub-fraction=" << a.spec.hub_fraction
            << " hub-strength=" << a.spec.hub_strength << " seed=" << a.spec.seed << "\n";
  std::cout << "wrote " << a.queries_out << " " << a.items_out << " " << a.pairs_out << "\n";
  return 0;
}

int run_train(TrainArgs& a) {
  a.cfg.loss.kind = parse_loss(a.loss_name);
  const EmbeddingSet queries = read_embedding_set(a.queries_in);
  const EmbeddingSet items = read_embedding_set(a.items_in);
  const TrainResult result = train(queries, items, a.cfg);
  save_encoder(a.query_encoder_out, result.query_encoder);
  save_encoder(a.item_encoder_out, result.item_encoder);
  write_history(a.history_out, result.history, a.cfg);
  std::cout << "trained " << a.cfg.epochs << " epochs; final loss "
            << number_repr(result.history.back()) << "\n";
  return 0;
}

ordered_json params_json(const EvalArgs& a) {
  switch (a.cfg.strategy) {
    case Strategy::inverted_softmax: return {{"beta", a.cfg.beta}};
    case Strategy::csls: return {{"k", a.cfg.csls_k}};
    default: return ordered_json::object();
  }
}

std::string params_tsv(const EvalArgs& a) {
  switch (a.cfg.strategy) {
    case Strategy::inverted_softmax: return "beta=" + number_repr(a.cfg.beta);
    case Strategy::csls: return "k=" + std::to_string(a.cfg.csls_k);
    default: return "-";
  }
}

ordered_json report_json(const RetrievalReport& r, const EvalArgs& a) {
  return {{"direction", direction_name(r.direction)}, {"r_at_1", r.r_at_1},
          {"r_at_5", r.r_at_5},                       {"r_at_10", r.r_at_10},
          {"med_r", r.med_r},                         {"mean_r", r.mean_r},
          {"strategy", strategy_name(a.cfg.strategy)}, {"params", params_json(a)}};
}

std::string report_tsv_row(const RetrievalReport& r, const EvalArgs& a) {
  return std::string(direction_name(r.direction)) + "\t" + number_repr(r.r_at_1) + "\t" +
         number_repr(r.r_at_5) + "\t" + number_repr(r.r_at_10) + "\t" + number_repr(r.med_r) +
         "\t" + number_repr(r.mean_r) + "\t" + strategy_name(a.cfg.strategy) + "\t" +
         params_tsv(a);
}

ordered_json buckets_json(const std::vector<HubBucket>& buckets) {
  ordered_json arr = ordered_json::array();
  for (const auto& b : buckets)
    arr.push_back({{"bucket", b.label}, {"count", b.count}, {"percentage", b.percentage}});
  return arr;
}

void print_human_report(const RetrievalReport& r) {
  std::printf("%-14s R@1 %5.1f  R@5 %5.1f  R@10 %5.1f  Med r %.1f  Mean r %.1f\n",
              direction_name(r.direction), r.r_at_1, r.r_at_5, r.r_at_10, r.med_r, r.mean_r);
}

int run_eval(EvalArgs& a) {
  a.cfg.strategy = parse_strategy(a.inference_name);
  EmbeddingSet queries = read_embedding_set(a.queries_in);
  EmbeddingSet items = read_embedding_set(a.items_in);
  if (!a.query_encoder_in.empty()) queries = encode_set(load_encoder(a.query_encoder_in), queries);
  if (!a.item_encoder_in.empty()) items = encode_set(load_encoder(a.item_encoder_in), items);

  const PairIndex pairs = a.pairs_in.empty()
                              ? (queries.rows() == items.rows()
                                     ? PairIndex::diagonal(queries.rows())
                                     : throw DimensionMismatchError(
                                           "eval: diagonal pairing needs equally many queries and "
                                           "items; pass --pairs"))
                              : read_pairs(a.pairs_in, queries, items);
  const PairIndex inverse_pairs = pairs.inverse();

  const SimilarityMatrix sim = cosine_similarity(queries, items);
  SimilarityMatrix sim_t;
  sim_t.scores = sim.scores.transpose();
  sim_t.provenance = Provenance::raw;

  ordered_json out_json;
  std::string out_tsv;
  std::vector<RetrievalReport> human;

  if (a.cfg.strategy == Strategy::hungarian) {
    // A matching yields one item per query, not a ranking: report R@1 per
    // direction plus the matching weight.
    const Matching m = match_hungarian(sim);
    Matching m_rev;
    m_rev.total_weight = m.total_weight;
    for (const auto& [q, i] : m.edges) m_rev.edges.emplace_back(i, q);
    std::sort(m_rev.edges.begin(), m_rev.edges.end());
    const double r1_fwd = matching_recall_at_1(m, pairs);
    const double r1_rev = matching_recall_at_1(m_rev, inverse_pairs);
    out_json["reports"] = ordered_json::array(
        {{{"direction", direction_name(Direction::image_to_text)},
          {"r_at_1", r1_fwd},
          {"matching_weight", m.total_weight},
          {"strategy", "hungarian"},
          {"params", ordered_json::object()}},
         {{"direction", direction_name(Direction::text_to_image)},
          {"r_at_1", r1_rev},
          {"matching_weight", m.total_weight},
          {"strategy", "hungarian"},
          {"params", ordered_json::object()}}});
    out_tsv = "direction\tr_at_1\tmatching_weight\tstrategy\tparams\n";
    out_tsv += std::string(direction_name(Direction::image_to_text)) + "\t" + number_repr(r1_fwd) +
               "\t" + number_repr(m.total_weight) + "\thungarian\t-\n";
    out_tsv += std::string(direction_name(Direction::text_to_image)) + "\t" + number_repr(r1_rev) +
               "\t" + number_repr(m.total_weight) + "\thungarian\t-\n";
    if (!a.out.empty()) {
      std::printf("%-14s R@1 %5.1f  matching weight %.4f\n",
                  direction_name(Direction::image_to_text), r1_fwd, m.total_weight);
      std::printf("%-14s R@1 %5.1f  matching weight %.4f\n",
                  direction_name(Direction::text_to_image), r1_rev, m.total_weight);
    }
    if (a.diagnose) {
      const std::vector<long> thresholds = {2, 5, 10};
      out_json["hub_histograms"] = ordered_json::array(
          {{{"direction", direction_name(Direction::image_to_text)},
            {"buckets", buckets_json(hub_summary(hub_histogram(sim), thresholds))}},
           {{"direction", direction_name(Direction::text_to_image)},
            {"buckets", buckets_json(hub_summary(hub_histogram(sim_t), thresholds))}}});
    }
  } else {
    // The reverse direction swaps the query/item roles symmetrically.
    const RankingResult fwd = rank_with(sim, a.cfg);
    const RankingResult rev = rank_with(sim_t, a.cfg);
    RetrievalReport rep_fwd =
        a.folds == 1 ? compute_report(fwd, pairs, Direction::image_to_text)
                     : compute_report_folds(fwd, pairs, Direction::image_to_text, a.folds);
    RetrievalReport rep_rev =
        a.folds == 1 ? compute_report(rev, inverse_pairs, Direction::text_to_image)
                     : compute_report_folds(rev, inverse_pairs, Direction::text_to_image, a.folds);
    out_json["reports"] = ordered_json::array({report_json(rep_fwd, a), report_json(rep_rev, a)});
    out_tsv = "direction\tr_at_1\tr_at_5\tr_at_10\tmed_r\tmean_r\tstrategy\tparams\n";
    out_tsv += report_tsv_row(rep_fwd, a) + "\n" + report_tsv_row(rep_rev, a) + "\n";
    human = {rep_fwd, rep_rev};
    if (a.diagnose) {
      const std::vector<long> thresholds = {2, 5, 10};
      const auto b_fwd = hub_summary(hub_histogram(fwd.adjusted), thresholds);
      const auto b_rev = hub_summary(hub_histogram(rev.adjusted), thresholds);
      out_json["hub_histograms"] = ordered_json::array(
          {{{"direction", direction_name(Direction::image_to_text)}, {"buckets", buckets_json(b_fwd)}},
           {{"direction", direction_name(Direction::text_to_image)}, {"buckets", buckets_json(b_rev)}}});
      for (const auto* pair : {&b_fwd, &b_rev}) {
        out_tsv += std::string("# hub_histogram ") +
                   (pair == &b_fwd ? direction_name(Direction::image_to_text)
                                   : direction_name(Direction::text_to_image)) +
                   "\n";
        for (const auto& b : *pair)
          out_tsv += b.label + "\t" + std::to_string(b.count) + "\t" + number_repr(b.percentage) + "\n";
      }
    }
  }

  const std::string payload = a.format == "json" ? out_json.dump(2) + "\n" : out_tsv;
  if (a.out.empty()) {
    std::cout << payload;
  } else {
    atomic_write(a.out, payload);
    for (const auto& r : human) print_human_report(r);
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-image matching toolkit: synthetic data, triplet-loss training, "
               "hubness-aware inference, retrieval metrics"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate paired synthetic embeddings");
  synth_cmd->add_option("--classes", synth.spec.n_classes, "Number of latent classes")
      ->check(CLI::Range(2, 1 << 20));
  synth_cmd->add_option("--per-class", synth.spec.samples_per_class, "Pairs per class")
      ->check(CLI::PositiveNumber);
  int synth_dim_both = 0;
  auto* dim_opt = synth_cmd->add_option("--dim", synth_dim_both, "Raw dimension for both sides")
                      ->check(CLI::PositiveNumber);
  auto* qdim = synth_cmd->add_option("--query-dim", synth.spec.d_raw_query, "Raw query dimension")
                   ->check(CLI::PositiveNumber);
  auto* idim = synth_cmd->add_option("--item-dim", synth.spec.d_raw_item, "Raw item dimension")
                   ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--noise-sigma", synth.spec.noise_sigma, "Per-sample noise")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--hub-fraction", synth.spec.hub_fraction, "Fraction of items biased into hubs")
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--hub-strength", synth.spec.hub_strength, "Hub bias strength")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--seed", synth.spec.seed, "RNG seed");
  synth_cmd->add_option("--queries-out", synth.queries_out, "Query embedding file");
  synth_cmd->add_option("--items-out", synth.items_out, "Item embedding file");
  synth_cmd->add_option("--pairs-out", synth.pairs_out, "Pairs file");
  synth_cmd->add_flag("--f32", synth.f32, "Store values as 32-bit floats");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the two linear encoders");
  train_cmd->add_option("--queries", train_args.queries_in, "Query embedding file")->required();
  train_cmd->add_option("--items", train_args.items_in, "Item embedding file")->required();
  train_cmd->add_option("--loss", train_args.loss_name, "Loss: sum|max|knn")
      ->check(CLI::IsMember({"sum", "max", "knn"}));
  train_cmd->add_option("--knn-k", train_args.cfg.loss.knn_k, "k for the kNN-margin loss")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--margin", train_args.cfg.loss.margin_alpha, "Margin alpha")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", train_args.cfg.epochs, "Training epochs")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch-size", train_args.cfg.batch_size, "Mini-batch size")
      ->check(CLI::Range(2, 1 << 20));
  train_cmd->add_option("--lr", train_args.cfg.lr, "Learning rate")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--lr-decay-every", train_args.cfg.lr_decay_every, "Epochs between decays")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr-decay-factor", train_args.cfg.lr_decay_factor, "Decay divisor")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--dim", train_args.cfg.joint_dim, "Joint embedding dimension")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train_args.cfg.seed, "RNG seed");
  train_cmd->add_option("--query-encoder-out", train_args.query_encoder_out, "Query encoder file");
  train_cmd->add_option("--item-encoder-out", train_args.item_encoder_out, "Item encoder file");
  train_cmd->add_option("--history-out", train_args.history_out, "Per-epoch history file");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Retrieve, score and diagnose hubs");
  eval_cmd->add_option("--queries", eval_args.queries_in, "Query embedding file")->required();
  eval_cmd->add_option("--items", eval_args.items_in, "Item embedding file")->required();
  eval_cmd->add_option("--pairs", eval_args.pairs_in, "Ground-truth pairs file (default: diagonal)");
  eval_cmd->add_option("--query-encoder", eval_args.query_encoder_in, "Apply this encoder to queries");
  eval_cmd->add_option("--item-encoder", eval_args.item_encoder_in, "Apply this encoder to items");
  eval_cmd->add_option("--inference", eval_args.inference_name, "naive|is|csls|hungarian")
      ->check(CLI::IsMember({"naive", "is", "csls", "hungarian"}));
  eval_cmd->add_option("--beta", eval_args.cfg.beta, "Inverted softmax temperature")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--csls-k", eval_args.cfg.csls_k, "CSLS neighborhood size")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--folds", eval_args.folds, "Average over contiguous query folds")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--format", eval_args.format, "Report format")
      ->check(CLI::IsMember({"json", "tsv"}));
  eval_cmd->add_option("--out", eval_args.out, "Report file (default: stdout)");
  eval_cmd->add_flag("--diagnose", eval_args.diagnose, "Append hub histogram buckets");

  try {
    app.parse(argc, argv);
    if (synth_cmd->parsed()) {
      if (*dim_opt) {
        if (!*qdim) synth.spec.d_raw_query = synth_dim_both;
        if (!*idim) synth.spec.d_raw_item = synth_dim_both;
      }
      return run_synth(synth);
    }
    if (train_cmd->parsed()) return run_train(train_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const DimensionMismatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitShape;
  } catch (const DivergedLossError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
