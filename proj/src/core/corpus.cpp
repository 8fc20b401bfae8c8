#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "error.hpp"
#include "rng.hpp"

namespace segmeta {

namespace fs = std::filesystem;

std::string CorpusLayout::resolve(const std::string& rel) const {
    if (rel.empty()) return rel;
    fs::path p(rel);
    if (p.is_absolute()) return rel;
    return (fs::path(root) / p).string();
}

std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& ratios) {
    if (ratios.empty()) fail("BadConfig", "no split ratios given");
    double total = 0.0;
    for (double r : ratios) {
        if (r < 0.0) fail("BadConfig", "split ratios must be non-negative");
        total += r;
    }
    if (total <= 0.0) fail("BadConfig", "split ratios sum to zero");
    std::vector<std::size_t> sizes(ratios.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        sizes[i] = static_cast<std::size_t>(
            std::floor(static_cast<double>(n) * ratios[i] / total));
        assigned += sizes[i];
    }
    // leftover frames go to splits in declared order
    for (std::size_t i = 0; assigned < n; i = (i + 1) % sizes.size()) {
        ++sizes[i];
        ++assigned;
    }
    return sizes;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    return fields;
}

}  // namespace

CorpusLayout load_corpus(const std::string& root, const CorpusConfig& cfg) {
    if (cfg.ratios.size() != cfg.split_names.size())
        fail("BadConfig", "one split name per ratio required");
    const std::string manifest_path = (fs::path(root) / "manifest.txt").string();
    std::ifstream in(manifest_path);
    if (!in) fail_io("IoFailure", "cannot open manifest '" + manifest_path + "'");

    CorpusLayout layout;
    layout.root = root;
    layout.split_names = cfg.split_names;

    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() != 5)
            fail("HeaderMalformed",
                 "manifest line " + std::to_string(line_no) + " needs 5 tab-separated fields");
        FrameEntry entry;
        entry.sequence_id = fields[0];
        try {
            entry.frame_index = std::stoi(fields[1]);
        } catch (const std::exception&) {
            fail("HeaderMalformed", "bad frame index on manifest line " + std::to_string(line_no));
        }
        entry.probs_path = fields[2];
        entry.gt_path = fields[3] == "-" ? "" : fields[3];
        entry.pseudo_path = fields[4] == "-" ? "" : fields[4];
        if (!seen_ids.insert(entry.frame_id()).second)
            fail("DuplicateFrameId", "frame '" + entry.frame_id() + "' appears twice");
        layout.frames.push_back(std::move(entry));
    }
    if (layout.frames.empty()) fail("EmptyInput", "manifest lists no frames");

    // group into sequences, preserving manifest order
    for (std::size_t i = 0; i < layout.frames.size(); ++i) {
        const FrameEntry& f = layout.frames[i];
        auto it = std::find_if(layout.sequences.begin(), layout.sequences.end(),
                               [&](const auto& s) { return s.first == f.sequence_id; });
        if (it == layout.sequences.end()) {
            layout.sequences.push_back({f.sequence_id, {i}});
        } else {
            const FrameEntry& prev = layout.frames[it->second.back()];
            if (f.frame_index <= prev.frame_index)
                fail("HeaderMalformed", "sequence '" + f.sequence_id +
                                            "' frame indices must increase strictly");
            it->second.push_back(i);
        }
    }

    if (cfg.check_files) {
        for (const FrameEntry& f : layout.frames) {
            if (!fs::exists(layout.resolve(f.probs_path)))
                fail("MissingFrame", "probs file '" + f.probs_path + "' missing for frame '" +
                                         f.frame_id() + "'");
            if (!f.gt_path.empty() && !fs::exists(layout.resolve(f.gt_path)))
                fail("MissingFrame", "label file '" + f.gt_path + "' missing for frame '" +
                                         f.frame_id() + "'");
            if (!f.pseudo_path.empty() && !fs::exists(layout.resolve(f.pseudo_path)))
                fail("MissingFrame", "pseudo file '" + f.pseudo_path + "' missing for frame '" +
                                         f.frame_id() + "'");
        }
    }

    // seeded shuffle, then contiguous blocks per split
    std::vector<std::size_t> order(layout.frames.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(cfg.seed);
    for (std::size_t i = order.size(); i-- > 1;)
        std::swap(order[i], order[rng.uniform_int(i + 1)]);
    std::vector<std::size_t> sizes = split_sizes(order.size(), cfg.ratios);
    layout.split_members.resize(sizes.size());
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        for (std::size_t k = 0; k < sizes[s]; ++k) {
            std::size_t frame = order[cursor++];
            layout.frames[frame].split = static_cast<int>(s);
            layout.split_members[s].push_back(frame);
        }
        std::sort(layout.split_members[s].begin(), layout.split_members[s].end());
    }
    return layout;
}

void write_manifest(const std::string& root, const std::vector<FrameEntry>& frames) {
    fs::create_directories(root);
    const std::string path = (fs::path(root) / "manifest.txt").string();
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) fail_io("IoFailure", "cannot open '" + tmp + "' for writing");
        for (const FrameEntry& f : frames) {
            out << f.sequence_id << '\t' << f.frame_index << '\t' << f.probs_path << '\t'
                << (f.gt_path.empty() ? "-" : f.gt_path) << '\t'
                << (f.pseudo_path.empty() ? "-" : f.pseudo_path) << '\n';
        }
        if (!out) fail_io("IoFailure", "write to '" + tmp + "' failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail_io("IoFailure", "cannot move '" + tmp + "' to '" + path + "'");
}

}  // namespace segmeta
