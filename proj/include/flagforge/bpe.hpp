#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace flagforge {

struct EmptyCorpus : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BadVocabSize : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Byte-level BPE vocabulary. Ids are dense: PAD=0, UNK=1, base bytes in
/// ascending byte order, then merged tokens in merge order.
struct BpeVocab {
    std::vector<std::pair<std::string, std::string>> merges;
    std::map<std::string, int> token_to_id;
    int vocab_size = 0;  // total token count including specials
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
};

/// Greedy most-frequent-pair merge loop. `vocab_size` bounds the number of
/// non-special tokens (base alphabet plus merges); training also stops when
/// no adjacent pair remains. Ties break on lexicographically smaller pair.
BpeVocab train_bpe(const std::vector<std::string>& corpus, int vocab_size);

/// Deterministic encoding: byte symbols, merges applied in learned order,
/// residual unknown symbols map to UNK. Empty text encodes to [UNK].
std::vector<int> encode(const BpeVocab& v, const std::string& text);

nlohmann::ordered_json vocab_to_json(const BpeVocab& v);
BpeVocab vocab_from_json(const nlohmann::ordered_json& j);
void save_vocab(const std::string& path, const BpeVocab& v);
BpeVocab load_vocab(const std::string& path);

}  // namespace flagforge
