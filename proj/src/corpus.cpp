#include "rlfuzz/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rlfuzz/crc32.hpp"
#include "rlfuzz/rng.hpp"

namespace rlfuzz::corpus {

Vocabulary Vocabulary::build(std::string_view corpus) {
    if (corpus.empty()) throw std::invalid_argument("vocabulary: empty corpus");
    bool seen[256] = {};
    for (char c : corpus) seen[uint8_t(c)] = true;

    Vocabulary v;
    std::fill(std::begin(v.ids_), std::end(v.ids_), -1);
    for (int cp = 0; cp < 256; ++cp) {
        if (!seen[cp]) continue;
        v.ids_[cp] = int(v.chars_.size());
        v.chars_.push_back(char(cp));
    }
    return v;
}

EncodedSequence Vocabulary::encode(std::string_view s) const {
    EncodedSequence out;
    out.reserve(s.size());
    for (char c : s) out.push_back(id_of(c));
    return out;
}

std::string Vocabulary::decode(const EncodedSequence& ids) const {
    std::string out;
    out.reserve(ids.size());
    for (int id : ids) out += char_of(id);
    return out;
}

std::string Vocabulary::to_text() const {
    std::string out;
    for (size_t id = 0; id < chars_.size(); ++id)
        out += std::to_string(int(uint8_t(chars_[id]))) + "\t" + std::to_string(id) + "\n";
    return out;
}

Vocabulary Vocabulary::from_text(const std::string& text) {
    Vocabulary v;
    std::fill(std::begin(v.ids_), std::end(v.ids_), -1);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("vocabulary line " + std::to_string(lineno) + ": missing tab");
        int cp = std::stoi(line.substr(0, tab));
        int id = std::stoi(line.substr(tab + 1));
        if (cp < 0 || cp > 255 || id != int(v.chars_.size()))
            throw std::runtime_error("vocabulary line " + std::to_string(lineno) + ": bad entry");
        v.ids_[cp] = id;
        v.chars_.push_back(char(cp));
    }
    if (v.chars_.empty()) throw std::runtime_error("vocabulary file: no entries");
    return v;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write vocabulary file: " + path);
    f << to_text();
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open vocabulary file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return from_text(ss.str());
}

uint32_t Vocabulary::content_hash() const {
    std::string t = to_text();
    return crc32(t.data(), t.size());
}

std::vector<DatasetSplit> make_splits(const EncodedSequence& corpus, int n_splits, double fraction,
                                      uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw std::invalid_argument("make_splits: fraction must be in (0,1)");
    if (n_splits <= 0) throw std::invalid_argument("make_splits: n_splits must be positive");
    if (corpus.size() < 2) throw std::invalid_argument("make_splits: corpus too short");

    Rng rng(seed);
    std::vector<DatasetSplit> splits;
    splits.reserve(size_t(n_splits));
    for (int i = 0; i < n_splits; ++i) {
        size_t offset = size_t(rng.uniform(corpus.size()));
        size_t cut = size_t(double(corpus.size()) * fraction + 0.5);

        DatasetSplit s;
        s.split_seed = seed;
        s.split_fraction = fraction;
        s.train.reserve(cut);
        s.validation.reserve(corpus.size() - cut);
        for (size_t j = 0; j < corpus.size(); ++j) {
            int id = corpus[(offset + j) % corpus.size()];
            if (j < cut) s.train.push_back(id);
            else s.validation.push_back(id);
        }
        splits.push_back(std::move(s));
    }
    return splits;
}

size_t count_windows(size_t seq_len, int window_len, int stride) {
    if (stride <= 0) stride = window_len;
    if (seq_len < size_t(window_len) + 1) return 0;
    return (seq_len - size_t(window_len) - 1) / size_t(stride) + 1;
}

std::vector<Window> training_windows(const EncodedSequence& seq, int window_len, int stride) {
    if (window_len <= 0) throw std::invalid_argument("training_windows: window_len must be positive");
    if (stride <= 0) stride = window_len;

    std::vector<Window> out;
    out.reserve(count_windows(seq.size(), window_len, stride));
    for (size_t start = 0; start + size_t(window_len) + 1 <= seq.size(); start += size_t(stride)) {
        Window w;
        w.input.assign(seq.begin() + long(start), seq.begin() + long(start) + window_len);
        w.target.assign(seq.begin() + long(start) + 1, seq.begin() + long(start) + window_len + 1);
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace rlfuzz::corpus
