#include "flagforge/bpe.hpp"

#include <fstream>
#include <set>

namespace flagforge {

namespace {

using Symbols = std::vector<std::string>;

Symbols to_bytes(const std::string& text) {
    Symbols s;
    s.reserve(text.size());
    for (char c : text) s.push_back(std::string(1, c));
    return s;
}

// Left-to-right, non-overlapping merge application.
void apply_merge(Symbols& s, const std::pair<std::string, std::string>& m) {
    Symbols out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == m.first && s[i + 1] == m.second) {
            out.push_back(m.first + m.second);
            ++i;
        } else {
            out.push_back(s[i]);
        }
    }
    s = std::move(out);
}

}  // namespace

BpeVocab train_bpe(const std::vector<std::string>& corpus, int vocab_size) {
    std::set<char> alphabet;
    std::vector<Symbols> seqs;
    for (const std::string& text : corpus) {
        if (text.empty()) continue;
        for (char c : text) alphabet.insert(c);
        seqs.push_back(to_bytes(text));
    }
    if (seqs.empty()) throw EmptyCorpus("BPE training corpus is empty");
    int base = static_cast<int>(alphabet.size());
    if (vocab_size <= base + 2)
        throw BadVocabSize("vocab_size " + std::to_string(vocab_size) +
                           " must exceed base alphabet + specials (" +
                           std::to_string(base + 2) + ")");

    BpeVocab v;
    // Merge until the non-special token budget is exhausted or nothing is
    // left to pair up.
    while (base + static_cast<int>(v.merges.size()) < vocab_size) {
        std::map<std::pair<std::string, std::string>, long> counts;
        for (const Symbols& s : seqs)
            for (size_t i = 0; i + 1 < s.size(); ++i) counts[{s[i], s[i + 1]}]++;
        if (counts.empty()) break;
        // Max frequency; std::map iteration gives the lexicographically
        // smallest pair on ties.
        std::pair<std::string, std::string> best;
        long best_count = 0;
        for (const auto& [pair, count] : counts)
            if (count > best_count) {
                best = pair;
                best_count = count;
            }
        v.merges.push_back(best);
        for (Symbols& s : seqs) apply_merge(s, best);
    }

    v.token_to_id["<pad>"] = BpeVocab::kPad;
    v.token_to_id["<unk>"] = BpeVocab::kUnk;
    int next = 2;
    for (char c : alphabet) v.token_to_id[std::string(1, c)] = next++;
    for (const auto& m : v.merges) v.token_to_id[m.first + m.second] = next++;
    v.vocab_size = next;
    return v;
}

std::vector<int> encode(const BpeVocab& v, const std::string& text) {
    if (text.empty()) return {BpeVocab::kUnk};
    Symbols s = to_bytes(text);
    for (const auto& m : v.merges) apply_merge(s, m);
    std::vector<int> ids;
    ids.reserve(s.size());
    for (const std::string& sym : s) {
        auto it = v.token_to_id.find(sym);
        ids.push_back(it == v.token_to_id.end() ? BpeVocab::kUnk : it->second);
    }
    return ids;
}

nlohmann::ordered_json vocab_to_json(const BpeVocab& v) {
    nlohmann::ordered_json j;
    auto merges = nlohmann::ordered_json::array();
    for (const auto& m : v.merges) merges.push_back({m.first, m.second});
    j["merges"] = merges;
    nlohmann::ordered_json vocab;
    for (const auto& [tok, id] : v.token_to_id) vocab[tok] = id;
    j["vocab"] = vocab;
    j["specials"] = {{"PAD", BpeVocab::kPad}, {"UNK", BpeVocab::kUnk}};
    j["version"] = 1;
    return j;
}

BpeVocab vocab_from_json(const nlohmann::ordered_json& j) {
    BpeVocab v;
    for (const auto& m : j["merges"])
        v.merges.push_back({m[0].get<std::string>(), m[1].get<std::string>()});
    for (auto it = j["vocab"].begin(); it != j["vocab"].end(); ++it)
        v.token_to_id[it.key()] = it.value().get<int>();
    v.vocab_size = static_cast<int>(v.token_to_id.size());
    return v;
}

void save_vocab(const std::string& path, const BpeVocab& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << vocab_to_json(v).dump(2) << "\n";
}

BpeVocab load_vocab(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    nlohmann::ordered_json j;
    in >> j;
    return vocab_from_json(j);
}

}  // namespace flagforge
