#include "medsum/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "medsum/metrics.hpp"
#include "medsum/report.hpp"
#include "medsum/synthetic.hpp"

namespace medsum {
namespace cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class KeyType { kInt, kReal, kBool, kString };

struct KeySpec {
  KeyType type;
  const char* default_value;
};

// The documented configuration schema. Defaults < file < flags.
const std::map<std::string, KeySpec>& schema() {
  static const std::map<std::string, KeySpec> s = {
      // pipeline
      {"min_freq", {KeyType::kInt, "1"}},
      {"max_vocab", {KeyType::kInt, "5000"}},
      {"train_ratio", {KeyType::kReal, "0.8"}},
      {"val_ratio", {KeyType::kReal, "0.1"}},
      {"test_ratio", {KeyType::kReal, "0.1"}},
      {"stopwords_file", {KeyType::kString, ""}},
      {"domain_terms_file", {KeyType::kString, ""}},
      // model
      {"embed_dim", {KeyType::kInt, "32"}},
      {"hidden_dim", {KeyType::kInt, "64"}},
      {"attention_dim", {KeyType::kInt, "32"}},
      {"encoder_layers", {KeyType::kInt, "2"}},
      {"max_source_len", {KeyType::kInt, "64"}},
      {"max_target_len", {KeyType::kInt, "24"}},
      {"attention", {KeyType::kBool, "on"}},
      {"coverage", {KeyType::kBool, "on"}},
      {"coverage_weight", {KeyType::kReal, "1"}},
      {"beam_width", {KeyType::kInt, "1"}},
      // training
      {"epochs", {KeyType::kInt, "60"}},
      {"batch_size", {KeyType::kInt, "4"}},
      {"base_lr", {KeyType::kReal, "0.15"}},
      {"warmup_steps", {KeyType::kInt, "20"}},
      {"momentum", {KeyType::kReal, "0.9"}},
      {"early_stop_patience", {KeyType::kInt, "10"}},
      {"clip_norm", {KeyType::kReal, "5"}},
      {"distill_temperature", {KeyType::kReal, "2"}},
      {"distill_mix", {KeyType::kReal, "0.5"}},
      {"mlm_steps", {KeyType::kInt, "0"}},
      {"mask_prob", {KeyType::kReal, "0.15"}},
      {"jobs", {KeyType::kInt, "1"}},
      {"folds", {KeyType::kInt, "5"}},
      {"seed", {KeyType::kInt, "1234"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kDefault:
      return "default";
    case Provenance::kFile:
      return "file";
    case Provenance::kFlag:
      return "flag";
  }
  return "?";
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& [key, spec] : schema()) {
    values_[key] = spec.default_value;
    provenance_[key] = Provenance::kDefault;
  }
}

void RunConfig::set_checked(const std::string& key, const std::string& value,
                            Provenance source) {
  auto it = schema().find(key);
  if (it == schema().end()) {
    throw DataError("unknown configuration key \"" + key + "\"");
  }
  const std::string v = trim(value);
  switch (it->second.type) {
    case KeyType::kInt: {
      try {
        std::size_t pos = 0;
        (void)std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw DataError("key \"" + key + "\" expects an integer, got \"" + v + "\"");
      }
      break;
    }
    case KeyType::kReal: {
      try {
        std::size_t pos = 0;
        (void)std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
      } catch (const std::exception&) {
        throw DataError("key \"" + key + "\" expects a number, got \"" + v + "\"");
      }
      break;
    }
    case KeyType::kBool: {
      if (v != "on" && v != "off" && v != "true" && v != "false" && v != "1" && v != "0") {
        throw DataError("key \"" + key + "\" expects on/off, got \"" + v + "\"");
      }
      break;
    }
    case KeyType::kString:
      break;
  }
  values_[key] = v;
  provenance_[key] = source;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file \"" + path + "\"");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw DataError("config file line " + std::to_string(line_no) +
                      ": expected \"key = value\"");
    }
    set_checked(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)),
                Provenance::kFile);
  }
}

void RunConfig::set_from_flag(const std::string& key, const std::string& value) {
  set_checked(key, value, Provenance::kFlag);
}

int RunConfig::get_int(const std::string& key) const {
  return static_cast<int>(std::stoll(values_.at(key)));
}

double RunConfig::get_real(const std::string& key) const {
  return std::stod(values_.at(key));
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = values_.at(key);
  return v == "on" || v == "true" || v == "1";
}

std::string RunConfig::get_string(const std::string& key) const { return values_.at(key); }

Provenance RunConfig::provenance(const std::string& key) const {
  return provenance_.at(key);
}

ModelConfig RunConfig::model_config(int vocab_size) const {
  ModelConfig c;
  c.vocab_size = vocab_size;
  c.embed_dim = get_int("embed_dim");
  c.hidden_dim = get_int("hidden_dim");
  c.attention_dim = get_int("attention_dim");
  c.encoder_layers = get_int("encoder_layers");
  c.max_source_len = get_int("max_source_len");
  c.max_target_len = get_int("max_target_len");
  c.attention_enabled = get_bool("attention");
  c.coverage_enabled = get_bool("coverage");
  c.coverage_weight = get_real("coverage_weight");
  c.beam_width = get_int("beam_width");
  c.seed = static_cast<std::uint64_t>(get_int("seed"));
  return c;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.epochs = get_int("epochs");
  c.batch_size = get_int("batch_size");
  c.base_lr = get_real("base_lr");
  c.warmup_steps = get_int("warmup_steps");
  c.momentum = get_real("momentum");
  c.early_stop_patience = get_int("early_stop_patience");
  c.clip_norm = get_real("clip_norm");
  c.coverage_weight = get_bool("coverage") ? get_real("coverage_weight") : 0.0;
  c.distill_temperature = get_real("distill_temperature");
  c.distill_mix = get_real("distill_mix");
  c.mlm_steps = get_int("mlm_steps");
  c.mask_prob = get_real("mask_prob");
  c.jobs = get_int("jobs");
  c.seed = static_cast<std::uint64_t>(get_int("seed"));
  return c;
}

PipelineOptions RunConfig::pipeline_options() const {
  PipelineOptions p;
  p.min_freq = get_int("min_freq");
  p.max_vocab = get_int("max_vocab");
  const std::string stopwords = get_string("stopwords_file");
  if (!stopwords.empty()) {
    for (const auto& w : load_token_file(stopwords)) p.stoplist.insert(w);
  }
  const std::string terms = get_string("domain_terms_file");
  if (!terms.empty()) p.domain_terms = load_token_file(terms);
  return p;
}

std::vector<std::string> RunConfig::describe() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) {
    out.push_back(key + " = " + value + " (" +
                  provenance_name(provenance_.at(key)) + ")");
  }
  return out;
}

int exit_code_for(const MedsumError& e) {
  if (dynamic_cast<const CompatError*>(&e) != nullptr) return kCompat;
  if (dynamic_cast<const CheckpointError*>(&e) != nullptr) return kCheckpoint;
  if (dynamic_cast<const NumericError*>(&e) != nullptr) return kNumeric;
  return kData;
}

namespace {

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const MedsumError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(kData);
  }
}

void ensure_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw DataError("--out directory is required");
  fs::create_directories(out_dir);
}

json record_to_json(const DocumentRecord& rec, const EncodedPair& pair) {
  return json{{"id", rec.id},       {"title", rec.title},
              {"body", rec.source}, {"reference", rec.reference},
              {"source_ids", pair.source}, {"target_ids", pair.target}};
}

std::string vocab_to_json_text(const Vocabulary& vocab) {
  std::vector<std::string> terms(vocab.domain_terms.begin(), vocab.domain_terms.end());
  std::sort(terms.begin(), terms.end());
  json j{{"tokens", vocab.tokens}, {"domain_terms", terms}};
  return j.dump(2) + "\n";
}

std::string model_label(const std::string& checkpoint_path) {
  const fs::path p(checkpoint_path);
  std::string stem = p.stem().string();
  return stem.empty() ? std::string("model") : stem;
}

// Greedy (or beam) decoding of encoded pairs plus per-pair metrics. Used by
// cmd_compare and shared with the tests.
RougeReport evaluate_pairs(const std::vector<EncodedPair>& pairs, const ModelParams& params,
                           const ModelConfig& config, const Vocabulary& vocab,
                           const std::unordered_set<std::string>& stoplist) {
  RougeReport rep;
  for (const auto& pair : pairs) {
    const TokenSequence decoded =
        config.beam_width > 1 ? beam_decode(pair.source, params, config, config.beam_width)
                              : greedy_decode(pair.source, params, config);
    const auto cand = decode_tokens(decoded, vocab);
    const auto ref = decode_tokens(pair.target, vocab);
    const MetricTriple m1 = rouge_n(cand, ref, 1);
    const MetricTriple m2 = rouge_n(cand, ref, 2);
    const MetricTriple ml = rouge_l(cand, ref);
    rep.rouge1.precision += m1.precision;
    rep.rouge1.recall += m1.recall;
    rep.rouge1.f1 += m1.f1;
    rep.rouge2.precision += m2.precision;
    rep.rouge2.recall += m2.recall;
    rep.rouge2.f1 += m2.f1;
    rep.rougeL.precision += ml.precision;
    rep.rougeL.recall += ml.recall;
    rep.rougeL.f1 += ml.f1;
    rep.recall += recall_metric(cand, ref, stoplist);
    ++rep.pair_count;
  }
  if (rep.pair_count > 0) {
    const double inv = 1.0 / rep.pair_count;
    for (MetricTriple* t : {&rep.rouge1, &rep.rouge2, &rep.rougeL}) {
      t->precision *= inv;
      t->recall *= inv;
      t->f1 *= inv;
    }
    rep.recall *= inv;
  }
  return rep;
}

void print_metrics_note() {
  std::cout << "# aggregation: mean of per-pair scores; rouge columns are F1; "
               "recall = content-unigram recall\n";
}

}  // namespace

Vocabulary load_vocab_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file \"" + path + "\"");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("vocabulary file \"" + path + "\" is not valid JSON");
  Vocabulary vocab;
  for (const auto& tok : j.at("tokens")) vocab.append(tok.get<std::string>());
  for (const auto& term : j.at("domain_terms")) {
    vocab.domain_terms.insert(term.get<std::string>());
  }
  if (vocab.size() < 4) throw DataError("vocabulary file is missing the special tokens");
  return vocab;
}

std::vector<EncodedPair> load_encoded_split(const std::string& path,
                                            const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file \"" + path + "\"");
  std::vector<EncodedPair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("not a JSON object", line_no);
    EncodedPair pair;
    try {
      pair.id = j.at("id").get<std::string>();
      pair.source = j.at("source_ids").get<TokenSequence>();
      pair.target = j.at("target_ids").get<TokenSequence>();
    } catch (const json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
    for (int id : pair.source) {
      if (id < 0 || id >= vocab.size()) {
        throw ParseError("source id out of vocabulary range", line_no);
      }
    }
    for (int id : pair.target) {
      if (id < 0 || id >= vocab.size()) {
        throw ParseError("target id out of vocabulary range", line_no);
      }
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

int cmd_preprocess(const RunConfig& config, const std::string& corpus_path,
                   const std::string& out_dir) {
  return guarded([&]() {
    ensure_out_dir(out_dir);
    const PipelineOptions pipeline = config.pipeline_options();
    const std::vector<DocumentRecord> records = load_corpus(corpus_path);

    Vocabulary vocab = build_vocabulary(records, pipeline.min_freq, pipeline.max_vocab);
    if (!pipeline.domain_terms.empty()) {
      vocab = extend_vocabulary(std::move(vocab), pipeline.domain_terms);
    }

    const SplitRatios ratios{config.get_real("train_ratio"), config.get_real("val_ratio"),
                             config.get_real("test_ratio")};
    const DatasetSplits splits =
        split_dataset(records, ratios, static_cast<std::uint64_t>(config.get_int("seed")));

    long long total_ids = 0, unk_ids = 0;
    auto write_split = [&](const std::vector<DocumentRecord>& recs, const char* name) {
      const auto pairs = encode_records(recs, vocab, pipeline.stoplist);
      std::string out;
      for (std::size_t i = 0; i < recs.size(); ++i) {
        for (const auto& seq : {pairs[i].source, pairs[i].target}) {
          for (int id : seq) {
            if (id == Vocabulary::kPad || id == Vocabulary::kBos || id == Vocabulary::kEos) {
              continue;
            }
            ++total_ids;
            if (id == Vocabulary::kUnk) ++unk_ids;
          }
        }
        out += record_to_json(recs[i], pairs[i]).dump() + "\n";
      }
      write_text_file((fs::path(out_dir) / name).string(), out);
      return pairs.size();
    };

    const std::size_t n_train = write_split(splits.train, "train.jsonl");
    const std::size_t n_val = write_split(splits.val, "val.jsonl");
    const std::size_t n_test = write_split(splits.test, "test.jsonl");

    write_text_file((fs::path(out_dir) / "vocab.json").string(), vocab_to_json_text(vocab));

    std::string stats;
    stats += "records = " + std::to_string(records.size()) + "\n";
    stats += "train = " + std::to_string(n_train) + "\n";
    stats += "val = " + std::to_string(n_val) + "\n";
    stats += "test = " + std::to_string(n_test) + "\n";
    stats += "vocab_size = " + std::to_string(vocab.size()) + "\n";
    stats += "domain_terms = " + std::to_string(vocab.domain_terms.size()) + "\n";
    stats += "encoded_tokens = " + std::to_string(total_ids) + "\n";
    stats += "oov_rate = " +
             format_number(total_ids > 0 ? static_cast<double>(unk_ids) / total_ids : 0.0) +
             "\n";
    stats += "\n[config]\n";
    for (const auto& line : config.describe()) stats += line + "\n";
    write_text_file((fs::path(out_dir) / "stats.txt").string(), stats);

    std::cout << "preprocessed " << records.size() << " records -> " << out_dir << " (vocab "
              << vocab.size() << ", oov "
              << format_number(total_ids > 0 ? static_cast<double>(unk_ids) / total_ids : 0.0)
              << ")\n";
    return static_cast<int>(kOk);
  });
}

int cmd_train(const RunConfig& config, const std::string& data_dir,
              const std::string& out_dir, bool plot) {
  return guarded([&]() {
    ensure_out_dir(out_dir);
    const Vocabulary vocab = load_vocab_file((fs::path(data_dir) / "vocab.json").string());
    const auto train_set =
        load_encoded_split((fs::path(data_dir) / "train.jsonl").string(), vocab);
    const auto val_set = load_encoded_split((fs::path(data_dir) / "val.jsonl").string(), vocab);
    const PipelineOptions pipeline = config.pipeline_options();

    const ModelConfig model_config = config.model_config(vocab.size());
    const TrainConfig train_config = config.train_config();
    const TrainResult result =
        train(train_set, val_set, vocab, model_config, train_config, pipeline.stoplist);

    write_text_file((fs::path(out_dir) / "history.csv").string(), history_csv(result.history));
    if (plot) {
      write_text_file((fs::path(out_dir) / "history.svg").string(),
                      history_svg(result.history));
    }
    save_checkpoint(result.checkpoint, (fs::path(out_dir) / "checkpoint.bin").string());

    if (result.aborted) {
      std::cerr << "error: training aborted: " << result.abort_reason << "\n";
      return static_cast<int>(kNumeric);
    }
    if (!result.history.rows.empty()) {
      const EpochRow& best =
          result.history.rows[static_cast<std::size_t>(result.best_epoch - 1)];
      print_metrics_note();
      std::cout << "epochs,best_epoch,train_loss,val_loss,rouge1,rouge2,rougeL,recall\n"
                << result.history.rows.size() << ',' << result.best_epoch << ','
                << format_number(best.train_loss) << ',' << format_number(best.val_loss)
                << ',' << format_number(best.rouge1) << ',' << format_number(best.rouge2)
                << ',' << format_number(best.rougeL) << ',' << format_number(best.recall)
                << "\n";
    }
    return static_cast<int>(kOk);
  });
}

int cmd_summarize(const RunConfig& config, const std::string& checkpoint_path,
                  const std::string& text, const std::string& in_file, int beam_width) {
  return guarded([&]() {
    std::string input = text;
    if (input.empty() && !in_file.empty()) {
      std::ifstream in(in_file);
      if (!in) throw DataError("cannot open input file \"" + in_file + "\"");
      std::stringstream ss;
      ss << in.rdbuf();
      input = ss.str();
    }
    if (trim(input).empty()) {
      std::cerr << "usage: medsum summarize --ckpt FILE (--text TEXT | --in FILE)\n";
      return static_cast<int>(kUsage);
    }

    const Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const ModelParams params = params_from_checkpoint(ckpt);
    const PipelineOptions pipeline = config.pipeline_options();

    DocumentRecord rec;
    rec.source = input;
    TokenSequence source = encode(source_tokens(rec, pipeline.stoplist), ckpt.vocab, false);
    if (source.empty()) source.push_back(Vocabulary::kUnk);
    if (static_cast<int>(source.size()) > ckpt.config.max_source_len) {
      source.resize(static_cast<std::size_t>(ckpt.config.max_source_len));
    }

    const int width = beam_width > 0 ? beam_width : ckpt.config.beam_width;
    const TokenSequence decoded = beam_decode(source, params, ckpt.config, width);
    std::cout << decode_ids(decoded, ckpt.vocab) << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_evaluate(const RunConfig& config, const std::string& checkpoint_path,
                 const std::string& data_path, const std::string& out_dir,
                 bool identity_decoder) {
  return guarded([&]() {
    ensure_out_dir(out_dir);
    const PipelineOptions pipeline = config.pipeline_options();
    const std::vector<DocumentRecord> records = load_corpus(data_path);

    SummarizeFn decoder;
    std::string label;
    Checkpoint ckpt;
    ModelParams params;
    if (identity_decoder) {
      decoder = [](const DocumentRecord& rec) { return rec.reference; };
      label = "identity";
    } else {
      ckpt = load_checkpoint(checkpoint_path);
      params = params_from_checkpoint(ckpt);
      ModelConfig run_config = ckpt.config;
      if (config.provenance("beam_width") != Provenance::kDefault) {
        run_config.beam_width = config.get_int("beam_width");
      }
      const auto stoplist = pipeline.stoplist;
      decoder = [ckpt, params, run_config, stoplist](const DocumentRecord& rec) {
        TokenSequence source = encode(source_tokens(rec, stoplist), ckpt.vocab, false);
        if (source.empty()) source.push_back(Vocabulary::kUnk);
        if (static_cast<int>(source.size()) > run_config.max_source_len) {
          source.resize(static_cast<std::size_t>(run_config.max_source_len));
        }
        const TokenSequence decoded =
            run_config.beam_width > 1
                ? beam_decode(source, params, run_config, run_config.beam_width)
                : greedy_decode(source, params, run_config);
        return decode_ids(decoded, ckpt.vocab);
      };
      label = model_label(checkpoint_path);
    }

    const CorpusEval eval = evaluate_corpus(decoder, records, pipeline.stoplist);
    write_text_file((fs::path(out_dir) / "audit.csv").string(), audit_csv(eval.per_pair));

    for (const auto& [id, err] : eval.failures) {
      std::cerr << "decode failed for \"" << id << "\": " << err << "\n";
    }
    print_metrics_note();
    std::cout << "model,rouge1,rouge2,rougeL,recall\n"
              << label << ',' << format_number(eval.report.rouge1.f1) << ','
              << format_number(eval.report.rouge2.f1) << ','
              << format_number(eval.report.rougeL.f1) << ','
              << format_number(eval.report.recall) << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_compare(const RunConfig& config, const std::string& data_dir,
                const std::string& out_dir, const std::vector<std::string>& variants) {
  return guarded([&]() {
    ensure_out_dir(out_dir);
    if (variants.size() < 2) {
      throw DataError("compare needs at least two variants");
    }
    const Vocabulary vocab = load_vocab_file((fs::path(data_dir) / "vocab.json").string());
    const auto train_set =
        load_encoded_split((fs::path(data_dir) / "train.jsonl").string(), vocab);
    const auto val_set = load_encoded_split((fs::path(data_dir) / "val.jsonl").string(), vocab);
    const auto test_set =
        load_encoded_split((fs::path(data_dir) / "test.jsonl").string(), vocab);
    const PipelineOptions pipeline = config.pipeline_options();

    std::vector<CompareRow> rows;
    for (const std::string& variant : variants) {
      CompareRow row;
      row.model = variant;
      try {
        ModelConfig mc = config.model_config(vocab.size());
        TrainConfig tc = config.train_config();
        if (variant == "seq2seq") {
          mc.attention_enabled = false;
          mc.coverage_enabled = false;
          tc.coverage_weight = 0.0;
          tc.mlm_steps = 0;
        } else if (variant == "attention") {
          mc.attention_enabled = true;
          mc.coverage_enabled = false;
          tc.coverage_weight = 0.0;
          tc.mlm_steps = 0;
        } else if (variant == "coverage") {
          mc.attention_enabled = true;
          mc.coverage_enabled = true;
        } else if (variant == "deep") {
          mc.attention_enabled = true;
          mc.coverage_enabled = false;
          tc.coverage_weight = 0.0;
          mc.encoder_layers += 1;
          tc.mlm_steps = 0;
        } else if (variant == "pretrain") {
          mc.attention_enabled = true;
          mc.coverage_enabled = false;
          tc.coverage_weight = 0.0;
          if (tc.mlm_steps <= 0) tc.mlm_steps = 200;
        } else if (variant == "distilled") {
          mc.attention_enabled = true;
          mc.coverage_enabled = false;
          tc.coverage_weight = 0.0;
          tc.mlm_steps = 0;
        } else {
          throw DataError("unknown variant \"" + variant +
                          "\" (expected seq2seq, attention, coverage, deep, pretrain "
                          "or distilled)");
        }

        Checkpoint ckpt;
        if (variant == "distilled") {
          const TrainResult teacher =
              train(train_set, val_set, vocab, mc, tc, pipeline.stoplist);
          ModelConfig student = mc;
          student.hidden_dim = std::max(8, mc.hidden_dim / 2);
          student.attention_dim = std::max(8, mc.attention_dim / 2);
          student.encoder_layers = 1;
          const TrainResult distilled = distill(teacher.checkpoint, student, train_set,
                                                val_set, vocab, tc, pipeline.stoplist);
          ckpt = distilled.checkpoint;
        } else {
          ckpt = train(train_set, val_set, vocab, mc, tc, pipeline.stoplist).checkpoint;
        }
        const ModelParams params = params_from_checkpoint(ckpt);
        row.report = evaluate_pairs(test_set, params, ckpt.config, vocab, pipeline.stoplist);
      } catch (const MedsumError& e) {
        row.failed = true;
        row.error = e.what();
        std::cerr << "variant \"" << variant << "\" failed: " << e.what() << "\n";
      }
      rows.push_back(std::move(row));
    }

    const std::string csv = compare_csv(rows);
    write_text_file((fs::path(out_dir) / "comparison.csv").string(), csv);
    print_metrics_note();
    std::cout << csv;
    return static_cast<int>(kOk);
  });
}

int cmd_crossval(const RunConfig& config, const std::string& corpus_path,
                 const std::string& out_dir) {
  return guarded([&]() {
    ensure_out_dir(out_dir);
    const std::vector<DocumentRecord> records = load_corpus(corpus_path);
    const PipelineOptions pipeline = config.pipeline_options();
    const int k = config.get_int("folds");

    const CrossValResult result = cross_validate(records, k, config.model_config(4),
                                                 config.train_config(), pipeline);

    const std::string csv = folds_csv(result);
    write_text_file((fs::path(out_dir) / "folds.csv").string(), csv);
    print_metrics_note();
    std::cout << csv;
    std::cout << "stddev," << format_number(result.stddev.val_loss) << ','
              << format_number(result.stddev.rouge1) << ','
              << format_number(result.stddev.rouge2) << ','
              << format_number(result.stddev.rougeL) << ','
              << format_number(result.stddev.recall) << "\n";

    int failed = 0;
    for (const auto& row : result.folds) {
      if (row.failed) {
        ++failed;
        std::cerr << "fold " << row.fold << " failed: " << row.error << "\n";
      }
    }
    return failed == k ? static_cast<int>(kData) : static_cast<int>(kOk);
  });
}

int cmd_distill(const RunConfig& config, const std::string& teacher_path,
                const std::string& data_dir, const std::string& out_dir) {
  return guarded([&]() {
    ensure_out_dir(out_dir);
    const Checkpoint teacher = load_checkpoint(teacher_path);
    const Vocabulary vocab = load_vocab_file((fs::path(data_dir) / "vocab.json").string());
    const auto train_set =
        load_encoded_split((fs::path(data_dir) / "train.jsonl").string(), vocab);
    const auto val_set = load_encoded_split((fs::path(data_dir) / "val.jsonl").string(), vocab);
    const PipelineOptions pipeline = config.pipeline_options();

    const ModelConfig student_config = config.model_config(vocab.size());
    const TrainConfig train_config = config.train_config();
    const TrainResult result = distill(teacher, student_config, train_set, val_set, vocab,
                                       train_config, pipeline.stoplist);

    write_text_file((fs::path(out_dir) / "history.csv").string(), history_csv(result.history));
    save_checkpoint(result.checkpoint, (fs::path(out_dir) / "student.bin").string());

    if (result.aborted) {
      std::cerr << "error: distillation aborted: " << result.abort_reason << "\n";
      return static_cast<int>(kNumeric);
    }
    if (!result.history.rows.empty()) {
      const EpochRow& best =
          result.history.rows[static_cast<std::size_t>(result.best_epoch - 1)];
      std::cout << "best_epoch,val_loss,rouge1,rouge2,rougeL,recall\n"
                << result.best_epoch << ',' << format_number(best.val_loss) << ','
                << format_number(best.rouge1) << ',' << format_number(best.rouge2) << ','
                << format_number(best.rougeL) << ',' << format_number(best.recall) << "\n";
    }
    return static_cast<int>(kOk);
  });
}

}  // namespace cli
}  // namespace medsum
