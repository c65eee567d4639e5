#pragma once

#include <cstdint>
#include <vector>

#include "medsum/text_pipeline.hpp"

namespace medsum {

// Copy-summarization task: each source is a random word sequence with a
// "focus" marker at a random position and the reference is the `ref_len`
// words right after the marker. Content-addressed extraction like this is
// the probe for attention vs the uniform-context baseline: a pooled
// encoding cannot tell which span was marked.
std::vector<DocumentRecord> make_copy_corpus(int n_docs, int src_len, int ref_len,
                                             std::uint64_t seed);

// Repetition-prone task: references repeat a short phrase several times, so
// lightly trained decoders fall into trigram loops without coverage.
std::vector<DocumentRecord> make_repetition_corpus(int n_docs, std::uint64_t seed);

}  // namespace medsum
