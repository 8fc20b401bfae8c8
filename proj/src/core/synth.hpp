#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "grid.hpp"
#include "segments.hpp"

namespace segmeta {

enum class ShapeKind { rectangle, ellipse };

struct ShapeSpec {
    ShapeKind kind = ShapeKind::rectangle;
    int class_id = 1;
    double row = 0.0, col = 0.0;  // center at frame 0
    double half_h = 1.0, half_w = 1.0;
    double vel_r = 0.0, vel_c = 0.0;  // per-frame translation
};

// Parameters of the scene generator. Scenes are painted shapes over a
// background class 0; the emitted probability volume is a sharpened blend
// of the prediction with a neighbourhood mixture, with configurable error
// modes: per-shape prediction jitter, pixel label swaps, off-target
// high-confidence blobs, suppression of the rare class toward background
// and per-frame flicker.
struct SceneSpec {
    int height = 64;
    int width = 64;
    int classes = 4;
    int shapes = 6;
    int rare_class = 3;
    std::vector<double> class_weights;  // sampling weight per class id

    double temperature = 0.5;          // power sharpening; smaller = sharper
    double boundary_temp_scale = 2.5;  // extra temperature within 2 px of a class edge
    double base_noise = 0.08;

    double label_swap_rate = 0.003;
    double fp_blob_rate = 0.5;
    int blob_slots = 6;
    double fn_suppression_rate = 0.5;
    double jitter_rate = 0.6;
    double flicker_prob = 0.0;
    int max_speed = 2;

    uint64_t seed = 42;
    std::vector<ShapeSpec> explicit_shapes;  // overrides sampling when set

    void validate() const;
    static SceneSpec from_file(const std::string& path);
    static SceneSpec from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs);
};

// Per-shape truth for one frame, the oracle for tracking tests.
struct ShapeTrace {
    int shape_id = 0;
    int class_id = 0;
    bool visible = false;
    bool suppressed = false;  // erased from the prediction
    std::vector<Run> pixels;  // visible ground-truth pixels (topmost shape wins)
    double centroid_r = 0.0;
    double centroid_c = 0.0;
};

struct SynthFrame {
    std::string frame_id;
    ProbabilityVolume probs;
    LabelMap gt;
    SegmentSet gt_segments;
    std::vector<ShapeTrace> shapes;
};

// Fully determined by (spec.seed, frame_index); frames are independent
// scenes.
SynthFrame generate_frame(const SceneSpec& spec, int frame_index);

// One scene whose shapes persist and translate by their velocity; flicker
// may drop a shape from individual frames (never its first).
std::vector<SynthFrame> generate_sequence(const SceneSpec& spec, int length,
                                          uint64_t sequence_id = 0);

struct SynthCorpusOptions {
    int frames = 20;          // frame count (single mode) or sequence count
    bool sequence_mode = false;
    int sequence_length = 10;
    bool emit_pseudo = true;  // near-perfect reference masks
};

// Writes probs/gt(/pseudo) npy files plus manifest.txt under `out_dir`.
std::vector<FrameEntry> write_synth_corpus(const SceneSpec& spec, const SynthCorpusOptions& opts,
                                           const std::string& out_dir);

// The reference-model stand-in: shapes repainted with a small independent
// jitter, no blobs, swaps or suppression.
LabelMap pseudo_reference_mask(const SceneSpec& spec, bool sequence_mode, uint64_t scene_id,
                               int frame_index);

}  // namespace segmeta
