#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rlfuzz::corpus {

using EncodedSequence = std::vector<int>;

// Bijective character <-> id map, ordered by code point. Characters outside
// the vocabulary map to id 0 when encoding at inference time.
class Vocabulary {
public:
    Vocabulary() = default;

    // builds from the distinct characters of a nonempty corpus
    static Vocabulary build(std::string_view corpus);

    int size() const { return int(chars_.size()); }
    bool contains(char c) const { return ids_[uint8_t(c)] >= 0; }
    int id_of(char c) const {
        int id = ids_[uint8_t(c)];
        return id >= 0 ? id : 0;
    }
    char char_of(int id) const { return chars_.at(size_t(id)); }

    EncodedSequence encode(std::string_view s) const;
    std::string decode(const EncodedSequence& ids) const;

    // persisted as "codepoint<TAB>id" lines
    std::string to_text() const;
    static Vocabulary from_text(const std::string& text);
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    uint32_t content_hash() const;  // stable across save/load

private:
    std::vector<char> chars_;  // id -> char
    int ids_[256];             // char -> id, -1 when absent
};

struct DatasetSplit {
    EncodedSequence train;
    EncodedSequence validation;
    uint64_t split_seed = 0;
    double split_fraction = 0.0;
};

// n_splits reproducible train/validation partitions of the encoded corpus.
// Each split rotates the corpus by a seeded offset and cuts at the fraction,
// so train and validation windows never overlap within a split.
std::vector<DatasetSplit> make_splits(const EncodedSequence& corpus, int n_splits, double fraction,
                                      uint64_t seed);

struct Window {
    EncodedSequence input;   // ids[start .. start+len)
    EncodedSequence target;  // ids[start+1 .. start+len+1) — next character at every step
};

// Non-overlapping by default (stride == window_len). Only full windows are
// emitted; a window needs window_len + 1 consecutive characters.
std::vector<Window> training_windows(const EncodedSequence& seq, int window_len, int stride = 0);

size_t count_windows(size_t seq_len, int window_len, int stride);

}  // namespace rlfuzz::corpus
