#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "medsum/training.hpp"

namespace medsum {
namespace cli {

// Stable exit codes: 0 success, 1 usage, 2 data, 3 numeric, 4 checkpoint,
// 5 compatibility.
enum ExitCode {
  kOk = 0,
  kUsage = 1,
  kData = 2,
  kNumeric = 3,
  kCheckpoint = 4,
  kCompat = 5,
};

enum class Provenance { kDefault, kFile, kFlag };

// Flat key-value configuration merged from defaults, an optional
// "key = value" file and command-line flags (later sources win). Every key
// is validated against the schema below; unknown keys are hard errors.
class RunConfig {
 public:
  RunConfig();

  void load_file(const std::string& path);
  void set_from_flag(const std::string& key, const std::string& value);

  int get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  Provenance provenance(const std::string& key) const;

  // Resolved sub-configurations.
  ModelConfig model_config(int vocab_size) const;
  TrainConfig train_config() const;
  PipelineOptions pipeline_options() const;

  // "key = value (source)" lines for logs and stats files.
  std::vector<std::string> describe() const;

 private:
  void set_checked(const std::string& key, const std::string& value, Provenance source);

  std::map<std::string, std::string> values_;
  std::map<std::string, Provenance> provenance_;
};

// Maps a caught MedsumError onto the exit-code contract.
int exit_code_for(const MedsumError& e);

int cmd_preprocess(const RunConfig& config, const std::string& corpus_path,
                   const std::string& out_dir);
int cmd_train(const RunConfig& config, const std::string& data_dir,
              const std::string& out_dir, bool plot);
int cmd_summarize(const RunConfig& config, const std::string& checkpoint_path,
                  const std::string& text, const std::string& in_file, int beam_width);
int cmd_evaluate(const RunConfig& config, const std::string& checkpoint_path,
                 const std::string& data_path, const std::string& out_dir,
                 bool identity_decoder);
int cmd_compare(const RunConfig& config, const std::string& data_dir,
                const std::string& out_dir, const std::vector<std::string>& variants);
int cmd_crossval(const RunConfig& config, const std::string& corpus_path,
                 const std::string& out_dir);
int cmd_distill(const RunConfig& config, const std::string& teacher_path,
                const std::string& data_dir, const std::string& out_dir);

// Shared with tests: encoded dataset files written by cmd_preprocess.
std::vector<EncodedPair> load_encoded_split(const std::string& path, const Vocabulary& vocab);
Vocabulary load_vocab_file(const std::string& path);

}  // namespace cli
}  // namespace medsum
