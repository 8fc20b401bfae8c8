#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace segmeta {

// One manifest line: sequence id, frame index, probability tensor and the
// optional ground-truth / pseudo label paths ('-' when absent).
struct FrameEntry {
    std::string sequence_id;
    int frame_index = 0;
    std::string probs_path;
    std::string gt_path;      // empty when unavailable
    std::string pseudo_path;  // empty when unavailable
    int split = -1;           // index into CorpusLayout::split_names

    std::string frame_id() const { return sequence_id + ":" + std::to_string(frame_index); }
};

struct CorpusConfig {
    std::vector<double> ratios = {0.8, 0.2};
    std::vector<std::string> split_names = {"train", "test"};
    uint64_t seed = 7;
    bool check_files = true;
};

struct CorpusLayout {
    std::string root;
    std::vector<FrameEntry> frames;  // manifest order
    std::vector<std::string> split_names;
    std::vector<std::vector<std::size_t>> split_members;  // per split, frame indices

    // ordered (sequence id, member frame indices)
    std::vector<std::pair<std::string, std::vector<std::size_t>>> sequences;

    std::string resolve(const std::string& rel) const;
};

// Frames are assigned to splits by a seeded shuffle; sizes are floored and
// the remainder goes to the splits in declared order.
std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& ratios);

CorpusLayout load_corpus(const std::string& root, const CorpusConfig& cfg);

void write_manifest(const std::string& root, const std::vector<FrameEntry>& frames);

}  // namespace segmeta
