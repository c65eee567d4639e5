// medsum: desk-scale abstractive summarization laboratory.
//
// Subcommands wire the library end to end: preprocess -> train -> summarize /
// evaluate / compare / crossval / distill. Every run is deterministic under
// --seed and writes only below --out.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "medsum/cli.hpp"

namespace {

struct CommonFlags {
  std::string config_file;
  std::string out_dir;
  int seed = -1;
  int epochs = -1;
  int folds = -1;
  int beam = -1;
  std::string coverage;
  std::string attention;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool wants_out) {
  cmd->add_option("--config", flags.config_file, "Configuration file (key = value lines)");
  if (wants_out) {
    cmd->add_option("--out", flags.out_dir, "Output directory (all files go here)")
        ->required();
  }
  cmd->add_option("--seed", flags.seed, "Random seed override");
  cmd->add_option("--epochs", flags.epochs, "Epoch count override");
  cmd->add_option("--folds", flags.folds, "Cross-validation fold count");
  cmd->add_option("--beam", flags.beam, "Beam width override");
  cmd->add_option("--coverage", flags.coverage, "Coverage mechanism: on or off")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--attention", flags.attention, "Attention mechanism: on or off")
      ->check(CLI::IsMember({"on", "off"}));
}

// default < file < flag.
medsum::cli::RunConfig resolve_config(const CommonFlags& flags) {
  medsum::cli::RunConfig config;
  if (!flags.config_file.empty()) config.load_file(flags.config_file);
  if (flags.seed >= 0) config.set_from_flag("seed", std::to_string(flags.seed));
  if (flags.epochs >= 0) config.set_from_flag("epochs", std::to_string(flags.epochs));
  if (flags.folds >= 0) config.set_from_flag("folds", std::to_string(flags.folds));
  if (flags.beam >= 0) config.set_from_flag("beam_width", std::to_string(flags.beam));
  if (!flags.coverage.empty()) config.set_from_flag("coverage", flags.coverage);
  if (!flags.attention.empty()) config.set_from_flag("attention", flags.attention);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"medsum: abstractive summarization laboratory"};
  app.require_subcommand(1);

  CommonFlags preprocess_flags, train_flags, summarize_flags, evaluate_flags;
  CommonFlags compare_flags, crossval_flags, distill_flags;

  std::string corpus_path, data_dir, checkpoint_path, data_path, teacher_path;
  std::string text, in_file;
  std::vector<std::string> variants;
  bool plot = false;
  bool identity_decoder = false;

  CLI::App* preprocess = app.add_subcommand(
      "preprocess", "Clean a corpus, build the vocabulary and write encoded splits");
  preprocess->add_option("--corpus", corpus_path, "Corpus JSONL file")->required();
  add_common(preprocess, preprocess_flags, true);

  CLI::App* train = app.add_subcommand("train", "Train a summarizer on preprocessed data");
  train->add_option("--data", data_dir, "Directory produced by preprocess")->required();
  train->add_flag("--plot", plot, "Also write an SVG chart of the history");
  add_common(train, train_flags, true);

  CLI::App* summarize = app.add_subcommand("summarize", "Decode a summary for one input");
  summarize->add_option("--ckpt", checkpoint_path, "Checkpoint file")->required();
  summarize->add_option("--text", text, "Input text");
  summarize->add_option("--in", in_file, "Input text file");
  add_common(summarize, summarize_flags, false);

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a test set");
  evaluate->add_option("--ckpt", checkpoint_path, "Checkpoint file");
  evaluate->add_option("--data", data_path, "Test set (corpus or split JSONL)")->required();
  evaluate->add_flag("--identity-decoder", identity_decoder,
                     "Debug decoder that returns the reference");
  add_common(evaluate, evaluate_flags, true);

  CLI::App* compare = app.add_subcommand(
      "compare", "Train and score model variants (seq2seq, attention, coverage, deep, "
                 "pretrain, distilled)");
  compare->add_option("--data", data_dir, "Directory produced by preprocess")->required();
  compare
      ->add_option("--variants", variants,
                   "Comma-separated variant list (at least two)")
      ->required()
      ->delimiter(',');
  add_common(compare, compare_flags, true);

  CLI::App* crossval = app.add_subcommand("crossval", "k-fold cross-validation on a corpus");
  crossval->add_option("--corpus", corpus_path, "Corpus JSONL file")->required();
  add_common(crossval, crossval_flags, true);

  CLI::App* distill = app.add_subcommand("distill", "Distill a teacher into a smaller student");
  distill->add_option("--teacher", teacher_path, "Teacher checkpoint")->required();
  distill->add_option("--data", data_dir, "Directory produced by preprocess")->required();
  add_common(distill, distill_flags, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : medsum::cli::kUsage;
  }

  try {
    if (preprocess->parsed()) {
      return medsum::cli::cmd_preprocess(resolve_config(preprocess_flags), corpus_path,
                                         preprocess_flags.out_dir);
    }
    if (train->parsed()) {
      return medsum::cli::cmd_train(resolve_config(train_flags), data_dir,
                                    train_flags.out_dir, plot);
    }
    if (summarize->parsed()) {
      return medsum::cli::cmd_summarize(resolve_config(summarize_flags), checkpoint_path,
                                        text, in_file, summarize_flags.beam);
    }
    if (evaluate->parsed()) {
      return medsum::cli::cmd_evaluate(resolve_config(evaluate_flags), checkpoint_path,
                                       data_path, evaluate_flags.out_dir, identity_decoder);
    }
    if (compare->parsed()) {
      return medsum::cli::cmd_compare(resolve_config(compare_flags), data_dir,
                                      compare_flags.out_dir, variants);
    }
    if (crossval->parsed()) {
      return medsum::cli::cmd_crossval(resolve_config(crossval_flags), corpus_path,
                                       crossval_flags.out_dir);
    }
    if (distill->parsed()) {
      return medsum::cli::cmd_distill(resolve_config(distill_flags), teacher_path, data_dir,
                                      distill_flags.out_dir);
    }
  } catch (const medsum::MedsumError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return medsum::cli::exit_code_for(e);
  }
  return medsum::cli::kUsage;
}
