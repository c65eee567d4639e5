#include "medsum/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace medsum {

namespace {

constexpr char kMagic[8] = {'M', 'S', 'U', 'M', 'C', 'K', 'P', 'T'};

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size},
              {"embed_dim", c.embed_dim},
              {"hidden_dim", c.hidden_dim},
              {"encoder_layers", c.encoder_layers},
              {"attention_dim", c.attention_dim},
              {"max_source_len", c.max_source_len},
              {"max_target_len", c.max_target_len},
              {"attention_enabled", c.attention_enabled},
              {"coverage_enabled", c.coverage_enabled},
              {"coverage_weight", c.coverage_weight},
              {"beam_width", c.beam_width},
              {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.embed_dim = j.at("embed_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.attention_dim = j.at("attention_dim").get<int>();
  c.max_source_len = j.at("max_source_len").get<int>();
  c.max_target_len = j.at("max_target_len").get<int>();
  c.attention_enabled = j.at("attention_enabled").get<bool>();
  c.coverage_enabled = j.at("coverage_enabled").get<bool>();
  c.coverage_weight = j.at("coverage_weight").get<real>();
  c.beam_width = j.at("beam_width").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

// The manifest stored in a file must match the canonical parameter layout
// for its config exactly; anything else is a corrupt or tampered file.
std::vector<ManifestEntry> canonical_manifest(const ModelConfig& config) {
  const ModelParams reference = init_params(config);
  std::vector<ManifestEntry> manifest;
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : reference.named()) {
    ManifestEntry e;
    e.name = name;
    e.shape = tensor->shape;
    e.offset = offset;
    offset += static_cast<std::uint64_t>(tensor->size()) * sizeof(float);
    manifest.push_back(std::move(e));
  }
  return manifest;
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

Checkpoint make_checkpoint(const ModelParams& params, const ModelConfig& config,
                           const Vocabulary& vocab) {
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.vocab = vocab;
  ckpt.manifest = canonical_manifest(config);
  const auto named = params.named();
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& [name, tensor] = named[i];
    if (tensor->shape != ckpt.manifest[i].shape) {
      throw CorruptPayload("make_checkpoint: parameter " + name +
                           " does not match the configured shape");
    }
    for (real v : tensor->values) ckpt.payload.push_back(static_cast<float>(v));
  }
  return ckpt;
}

ModelParams params_from_checkpoint(const Checkpoint& ckpt) {
  ModelParams params = init_params(ckpt.config);
  const auto named = params.named();
  if (named.size() != ckpt.manifest.size()) {
    throw CorruptPayload("checkpoint manifest does not match the configured layout");
  }
  std::size_t idx = 0;
  for (const auto& [name, tensor] : named) {
    const ManifestEntry& entry = ckpt.manifest[idx];
    const std::uint64_t begin = entry.offset / sizeof(float);
    for (int i = 0; i < tensor->size(); ++i) {
      tensor->values[static_cast<std::size_t>(i)] =
          static_cast<real>(ckpt.payload[begin + static_cast<std::uint64_t>(i)]);
    }
    ++idx;
  }
  return params;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json header;
  header["version"] = ckpt.version;
  header["config"] = config_to_json(ckpt.config);
  header["vocabulary"] = json{{"tokens", ckpt.vocab.tokens},
                              {"domain_terms", std::vector<std::string>(
                                                   ckpt.vocab.domain_terms.begin(),
                                                   ckpt.vocab.domain_terms.end())}};
  json manifest = json::array();
  for (const auto& e : ckpt.manifest) {
    manifest.push_back(json{{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}});
  }
  header["manifest"] = manifest;

  // Sort the domain terms so the header bytes are deterministic.
  auto& terms = header["vocabulary"]["domain_terms"];
  std::vector<std::string> sorted = terms.get<std::vector<std::string>>();
  std::sort(sorted.begin(), sorted.end());
  terms = sorted;

  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open \"" + path + "\" for writing");
  out.write(kMagic, sizeof(kMagic));
  write_u32_le(out, static_cast<std::uint32_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (float v : ckpt.payload) {
    static_assert(sizeof(float) == 4);
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32_le(out, bits);
  }
  if (!out) throw IoError("failed while writing \"" + path + "\"");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint \"" + path + "\"");

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CorruptPayload("\"" + path + "\" is not a checkpoint file");
  }
  const std::uint32_t header_len = read_u32_le(in);
  if (!in) throw CorruptPayload("truncated checkpoint header length");
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), header_len);
  if (!in) throw CorruptPayload("truncated checkpoint header");

  json header = json::parse(header_text, nullptr, false);
  if (header.is_discarded()) throw CorruptPayload("checkpoint header is not valid JSON");

  Checkpoint ckpt;
  try {
    ckpt.version = header.at("version").get<int>();
    if (ckpt.version != Checkpoint::kVersion) {
      throw VersionMismatch("checkpoint version " + std::to_string(ckpt.version) +
                            " is not supported (expected " +
                            std::to_string(Checkpoint::kVersion) + ")");
    }
    ckpt.config = config_from_json(header.at("config"));
    ckpt.vocab = Vocabulary{};
    for (const auto& tok : header.at("vocabulary").at("tokens")) {
      ckpt.vocab.append(tok.get<std::string>());
    }
    for (const auto& term : header.at("vocabulary").at("domain_terms")) {
      ckpt.vocab.domain_terms.insert(term.get<std::string>());
    }
    for (const auto& e : header.at("manifest")) {
      ManifestEntry entry;
      entry.name = e.at("name").get<std::string>();
      entry.shape = e.at("shape").get<std::vector<int>>();
      entry.offset = e.at("offset").get<std::uint64_t>();
      ckpt.manifest.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw CorruptPayload(std::string("malformed checkpoint header: ") + e.what());
  }

  if (ckpt.vocab.size() != ckpt.config.vocab_size) {
    throw CorruptPayload("checkpoint vocabulary size disagrees with its config");
  }
  const auto expected = canonical_manifest(ckpt.config);
  if (expected.size() != ckpt.manifest.size()) {
    throw CorruptPayload("checkpoint manifest has the wrong number of entries");
  }
  std::uint64_t payload_floats = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (ckpt.manifest[i].name != expected[i].name ||
        ckpt.manifest[i].shape != expected[i].shape ||
        ckpt.manifest[i].offset != expected[i].offset) {
      throw CorruptPayload("checkpoint manifest entry \"" + ckpt.manifest[i].name +
                           "\" does not match the canonical layout");
    }
    payload_floats += static_cast<std::uint64_t>(shape_size(ckpt.manifest[i].shape));
  }

  ckpt.payload.resize(payload_floats);
  for (std::uint64_t i = 0; i < payload_floats; ++i) {
    const std::uint32_t bits = read_u32_le(in);
    if (!in) throw CorruptPayload("checkpoint payload is shorter than its manifest");
    float v;
    std::memcpy(&v, &bits, 4);
    ckpt.payload[i] = v;
  }
  // Exactly the manifest's worth of floats, nothing more.
  char extra;
  if (in.read(&extra, 1)) {
    throw CorruptPayload("checkpoint payload is longer than its manifest");
  }
  return ckpt;
}

}  // namespace medsum
