#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "array.hpp"
#include "error.hpp"
#include "rng.hpp"

namespace segmeta {

namespace {

// stream tags for counter-based draws
constexpr uint64_t kSceneTag = 0x5ce9e;
constexpr uint64_t kGeomTag = 0x9e03;
constexpr uint64_t kJitterTag = 0x7177e5;
constexpr uint64_t kSuppressTag = 0x5abb;
constexpr uint64_t kFlickerTag = 0xf11c;
constexpr uint64_t kSwapTag = 0x5a4b;
constexpr uint64_t kBlobTag = 0xb10b;
constexpr uint64_t kNoiseTag = 0x9015e;
constexpr uint64_t kPseudoTag = 0x5eed0;

struct PlacedShape {
    const ShapeSpec* spec;
    double row, col;  // center at the current frame
    bool covers(int r, int c) const {
        double dr = r - row, dc = c - col;
        if (spec->kind == ShapeKind::rectangle)
            return std::abs(dr) <= spec->half_h && std::abs(dc) <= spec->half_w;
        double nr = dr / spec->half_h, nc = dc / spec->half_w;
        return nr * nr + nc * nc <= 1.0;
    }
};

void paint(LabelMap& map, std::vector<int>& owner, const PlacedShape& shape, int shape_id,
           uint8_t label) {
    int r0 = std::max(0, static_cast<int>(std::floor(shape.row - shape.spec->half_h)));
    int r1 = std::min(map.height - 1, static_cast<int>(std::ceil(shape.row + shape.spec->half_h)));
    int c0 = std::max(0, static_cast<int>(std::floor(shape.col - shape.spec->half_w)));
    int c1 = std::min(map.width - 1, static_cast<int>(std::ceil(shape.col + shape.spec->half_w)));
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            if (shape.covers(r, c)) {
                map.at(r, c) = label;
                if (!owner.empty()) owner[static_cast<std::size_t>(r) * map.width + c] = shape_id;
            }
}

}  // namespace

void SceneSpec::validate() const {
    if (height < 4 || width < 4) fail("BadConfig", "scene needs at least 4x4 pixels");
    if (classes < 2 || classes > 64) fail("BadConfig", "class count must lie in [2, 64]");
    if (rare_class < 1 || rare_class >= classes)
        fail("BadConfig", "rare class must be a non-background class id");
    if (!(temperature > 0.0)) fail("BadConfig", "temperature must be positive");
    if (boundary_temp_scale < 1.0) fail("BadConfig", "boundary temperature scale must be >= 1");
    auto rate = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!rate(label_swap_rate) || !rate(fp_blob_rate) || !rate(fn_suppression_rate) ||
        !rate(jitter_rate) || !rate(flicker_prob))
        fail("BadConfig", "all rates must lie in [0, 1]");
    if (!(base_noise > 0.0 && base_noise < 1.0)) fail("BadConfig", "base noise must be in (0, 1)");
    if (shapes < 1 && explicit_shapes.empty()) fail("BadConfig", "need at least one shape");
    for (const ShapeSpec& s : explicit_shapes) {
        if (s.class_id < 1 || s.class_id >= classes)
            fail("BadConfig", "shape class must be a non-background class id");
        if (!(s.half_h > 0.0) || !(s.half_w > 0.0))
            fail("ShapeOutOfBounds", "shape extents must be positive");
        if (s.row < 0.0 || s.row >= height || s.col < 0.0 || s.col >= width)
            fail("ShapeOutOfBounds", "shape center lies outside the frame");
    }
}

SceneSpec SceneSpec::from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
    SceneSpec spec;
    auto to_int = [](const std::string& k, const std::string& v) {
        try {
            return std::stoi(v);
        } catch (const std::exception&) {
            fail("BadConfig", "key '" + k + "': '" + v + "' is not an integer");
        }
    };
    auto to_double = [](const std::string& k, const std::string& v) {
        try {
            return std::stod(v);
        } catch (const std::exception&) {
            fail("BadConfig", "key '" + k + "': '" + v + "' is not a number");
        }
    };
    std::vector<std::pair<int, ShapeSpec>> explicit_shapes;
    std::vector<std::pair<int, double>> weights;
    for (const auto& [key, value] : pairs) {
        if (key == "height") spec.height = to_int(key, value);
        else if (key == "width") spec.width = to_int(key, value);
        else if (key == "classes") spec.classes = to_int(key, value);
        else if (key == "shapes") spec.shapes = to_int(key, value);
        else if (key == "rare_class") spec.rare_class = to_int(key, value);
        else if (key == "temperature") spec.temperature = to_double(key, value);
        else if (key == "boundary_temp_scale") spec.boundary_temp_scale = to_double(key, value);
        else if (key == "base_noise") spec.base_noise = to_double(key, value);
        else if (key == "label_swap_rate") spec.label_swap_rate = to_double(key, value);
        else if (key == "fp_blob_rate") spec.fp_blob_rate = to_double(key, value);
        else if (key == "blob_slots") spec.blob_slots = to_int(key, value);
        else if (key == "fn_suppression_rate") spec.fn_suppression_rate = to_double(key, value);
        else if (key == "jitter_rate") spec.jitter_rate = to_double(key, value);
        else if (key == "flicker_prob") spec.flicker_prob = to_double(key, value);
        else if (key == "max_speed") spec.max_speed = to_int(key, value);
        else if (key == "seed") spec.seed = static_cast<uint64_t>(std::stoull(value));
        else if (key.rfind("weight_", 0) == 0) {
            weights.push_back({to_int(key, key.substr(7)), to_double(key, value)});
        } else if (key.rfind("shape_", 0) == 0) {
            // kind:class:row:col:half_h:half_w:vel_r:vel_c
            std::vector<std::string> f;
            std::stringstream ss(value);
            std::string part;
            while (std::getline(ss, part, ':')) f.push_back(part);
            if (f.size() != 8) fail("BadConfig", "shape '" + value + "' needs 8 ':' fields");
            ShapeSpec s;
            if (f[0] == "rect") s.kind = ShapeKind::rectangle;
            else if (f[0] == "ellipse") s.kind = ShapeKind::ellipse;
            else fail("BadConfig", "unknown shape kind '" + f[0] + "'");
            s.class_id = to_int(key, f[1]);
            s.row = to_double(key, f[2]);
            s.col = to_double(key, f[3]);
            s.half_h = to_double(key, f[4]);
            s.half_w = to_double(key, f[5]);
            s.vel_r = to_double(key, f[6]);
            s.vel_c = to_double(key, f[7]);
            explicit_shapes.push_back({to_int(key, key.substr(6)), s});
        } else {
            fail("BadConfig", "unknown scene key '" + key + "'");
        }
    }
    std::sort(explicit_shapes.begin(), explicit_shapes.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [idx, s] : explicit_shapes) spec.explicit_shapes.push_back(s);
    if (!weights.empty()) {
        spec.class_weights.assign(spec.classes, 0.0);
        for (const auto& [cls, w] : weights) {
            if (cls < 1 || cls >= spec.classes)
                fail("BadConfig", "weight for invalid class " + std::to_string(cls));
            if (w < 0.0) fail("BadConfig", "class weights must be non-negative");
            spec.class_weights[cls] = w;
        }
    }
    spec.validate();
    return spec;
}

SceneSpec SceneSpec::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_io("IoFailure", "cannot open scene spec '" + path + "'");
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
        std::size_t start = line.find_first_not_of(' ');
        if (start == std::string::npos) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            fail("BadConfig", "scene spec line " + std::to_string(line_no) + " has no '='");
        pairs.push_back({line.substr(start, eq - start), line.substr(eq + 1)});
    }
    return from_pairs(pairs);
}

namespace {

std::vector<ShapeSpec> sample_scene(const SceneSpec& spec, uint64_t scene) {
    if (!spec.explicit_shapes.empty()) return spec.explicit_shapes;
    std::vector<ShapeSpec> shapes;
    Rng rng(mix64(scene, kGeomTag));
    // non-rare sampling weights
    std::vector<double> weights(spec.classes, 0.0);
    if (!spec.class_weights.empty()) {
        weights = spec.class_weights;
    } else {
        for (int c = 1; c < spec.classes; ++c)
            if (c != spec.rare_class) weights[c] = 1.0;
        if (spec.classes == 2) weights[spec.rare_class] = 1.0;  // only one foreground class
    }
    double weight_sum = 0.0;
    for (double w : weights) weight_sum += w;
    if (weight_sum <= 0.0) fail("BadConfig", "class weights sum to zero");

    const double h = spec.height, w = spec.width;
    for (int i = 0; i < spec.shapes; ++i) {
        ShapeSpec s;
        const bool rare_slot = i == spec.shapes - 1;  // painted last, on top
        if (rare_slot) {
            s.class_id = spec.rare_class;
        } else {
            double pick = rng.uniform() * weight_sum;
            int cls = 1;
            for (int c = 1; c < spec.classes; ++c) {
                cls = c;
                if (pick < weights[c]) break;
                pick -= weights[c];
            }
            s.class_id = cls;
        }
        s.kind = rng.bernoulli(0.5) ? ShapeKind::rectangle : ShapeKind::ellipse;
        s.row = rng.uniform(0.18 * h, 0.82 * h);
        s.col = rng.uniform(0.18 * w, 0.82 * w);
        if (s.class_id == spec.rare_class) {
            // roughly one percent of the frame
            s.half_h = rng.uniform(0.042 * h, 0.06 * h);
            s.half_w = rng.uniform(0.042 * w, 0.06 * w);
        } else {
            s.half_h = rng.uniform(0.07 * h, 0.16 * h);
            s.half_w = rng.uniform(0.07 * w, 0.16 * w);
        }
        s.vel_r = rng.uniform_range(-spec.max_speed, spec.max_speed);
        s.vel_c = rng.uniform_range(-spec.max_speed, spec.max_speed);
        shapes.push_back(s);
    }
    return shapes;
}

struct FrameBuild {
    LabelMap gt;
    LabelMap pred;
    std::vector<int> gt_owner;           // topmost shape per pixel, -1 background
    std::vector<uint8_t> pixel_kind;     // 0 normal, 1 swapped, 2 blob, 3 suppressed
    std::vector<uint8_t> suppressed_to;  // rare class behind a suppressed pixel
    std::vector<ShapeTrace> traces;
};

FrameBuild build_labels(const SceneSpec& spec, const std::vector<ShapeSpec>& shapes,
                        uint64_t scene, int t) {
    const int H = spec.height, W = spec.width;
    FrameBuild fb;
    fb.gt = LabelMap::filled(H, W, 0);
    fb.pred = LabelMap::filled(H, W, 0);
    fb.gt_owner.assign(static_cast<std::size_t>(H) * W, -1);
    fb.pixel_kind.assign(static_cast<std::size_t>(H) * W, 0);
    fb.suppressed_to.assign(static_cast<std::size_t>(H) * W, 0);

    std::vector<char> visible(shapes.size(), 0), suppressed(shapes.size(), 0);
    std::vector<std::pair<double, double>> jitter(shapes.size(), {0.0, 0.0});
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        bool flickered =
            t > 0 && stream_uniform(scene, kFlickerTag, i, static_cast<uint64_t>(t)) <
                         spec.flicker_prob;
        visible[i] = !flickered;
        if (!visible[i]) continue;
        suppressed[i] = shapes[i].class_id == spec.rare_class &&
                        stream_uniform(scene, kSuppressTag, i, static_cast<uint64_t>(t)) <
                            spec.fn_suppression_rate;
        if (stream_uniform(scene, kJitterTag, i, static_cast<uint64_t>(t)) < spec.jitter_rate) {
            uint64_t j = mix64(scene, kJitterTag + 1, i, static_cast<uint64_t>(t));
            int dr = static_cast<int>(j % 5) - 2;
            int dc = static_cast<int>((j >> 8) % 5) - 2;
            if (dr == 0 && dc == 0) dr = 1;
            jitter[i] = {static_cast<double>(dr), static_cast<double>(dc)};
        }
    }

    // ground truth, later shapes on top
    std::vector<int> no_owner;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (!visible[i]) continue;
        PlacedShape placed{&shapes[i], shapes[i].row + t * shapes[i].vel_r,
                           shapes[i].col + t * shapes[i].vel_c};
        paint(fb.gt, fb.gt_owner, placed, static_cast<int>(i),
              static_cast<uint8_t>(shapes[i].class_id));
    }

    // prediction: repaint with jitter, skipping suppressed shapes
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (!visible[i] || suppressed[i]) continue;
        PlacedShape placed{&shapes[i], shapes[i].row + t * shapes[i].vel_r + jitter[i].first,
                           shapes[i].col + t * shapes[i].vel_c + jitter[i].second};
        paint(fb.pred, no_owner, placed, static_cast<int>(i),
              static_cast<uint8_t>(shapes[i].class_id));
    }

    // shape traces from the final ground truth
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        ShapeTrace trace;
        trace.shape_id = static_cast<int>(i);
        trace.class_id = shapes[i].class_id;
        trace.visible = visible[i] != 0;
        trace.suppressed = suppressed[i] != 0;
        fb.traces.push_back(std::move(trace));
    }
    for (int r = 0; r < H; ++r) {
        int c = 0;
        while (c < W) {
            int owner = fb.gt_owner[static_cast<std::size_t>(r) * W + c];
            if (owner < 0) {
                ++c;
                continue;
            }
            int begin = c;
            while (c < W && fb.gt_owner[static_cast<std::size_t>(r) * W + c] == owner) ++c;
            fb.traces[owner].pixels.push_back({r, begin, c});
        }
    }
    for (ShapeTrace& trace : fb.traces) {
        long long n = 0;
        for (const Run& run : trace.pixels) {
            int len = run.col_end - run.col_begin;
            n += len;
            trace.centroid_r += static_cast<double>(run.row) * len;
            trace.centroid_c += (run.col_begin + run.col_end - 1) / 2.0 * len;
        }
        if (n > 0) {
            trace.centroid_r /= static_cast<double>(n);
            trace.centroid_c /= static_cast<double>(n);
        } else {
            trace.visible = false;  // drifted fully outside or overpainted
        }
    }

    // a suppressed shape leaves its class as secondary evidence
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        if (!suppressed[i]) continue;
        for (const Run& run : fb.traces[i].pixels)
            for (int c = run.col_begin; c < run.col_end; ++c) {
                std::size_t px = static_cast<std::size_t>(run.row) * W + c;
                if (fb.pred.labels[px] != shapes[i].class_id) {
                    fb.pixel_kind[px] = 3;
                    fb.suppressed_to[px] = static_cast<uint8_t>(shapes[i].class_id);
                }
            }
    }

    // pixel label swaps
    if (spec.label_swap_rate > 0.0) {
        for (std::size_t px = 0; px < fb.pred.labels.size(); ++px) {
            if (stream_uniform(scene, kSwapTag, px, static_cast<uint64_t>(t)) >=
                spec.label_swap_rate)
                continue;
            uint64_t draw = mix64(scene, kSwapTag + 1, px, static_cast<uint64_t>(t));
            int other = static_cast<int>(draw % static_cast<uint64_t>(spec.classes - 1));
            if (other >= fb.pred.labels[px]) ++other;
            fb.pred.labels[px] = static_cast<uint8_t>(other);
            fb.pixel_kind[px] = 1;
        }
    }

    // high-confidence blobs strictly off the ground truth of their class
    std::vector<char> blob_mask(static_cast<std::size_t>(H) * W, 0);
    for (int slot = 0; slot < spec.blob_slots; ++slot) {
        if (stream_uniform(scene, kBlobTag, slot, static_cast<uint64_t>(t)) >= spec.fp_blob_rate)
            continue;
        for (int attempt = 0; attempt < 50; ++attempt) {
            uint64_t g = mix64(mix64(scene, kBlobTag + 1, slot, static_cast<uint64_t>(t)),
                               static_cast<uint64_t>(attempt));
            Rng rng(g);
            int cls = 1 + static_cast<int>(rng.uniform_int(spec.classes - 1));
            double hh = rng.uniform(1.2, 2.2), hw = rng.uniform(1.2, 2.2);
            double row = rng.uniform(hh + 1.0, H - hh - 2.0);
            double col = rng.uniform(hw + 1.0, W - hw - 2.0);
            ShapeSpec blob;
            blob.kind = rng.bernoulli(0.5) ? ShapeKind::rectangle : ShapeKind::ellipse;
            blob.class_id = cls;
            blob.half_h = hh;
            blob.half_w = hw;
            PlacedShape placed{&blob, row, col};
            // dilated footprint must avoid ground truth of the blob class
            // and every previously placed blob
            bool ok = true;
            int r0 = std::max(0, static_cast<int>(row - hh) - 1);
            int r1 = std::min(H - 1, static_cast<int>(row + hh) + 1);
            int c0 = std::max(0, static_cast<int>(col - hw) - 1);
            int c1 = std::min(W - 1, static_cast<int>(col + hw) + 1);
            for (int r = r0; r <= r1 && ok; ++r)
                for (int c = c0; c <= c1 && ok; ++c) {
                    std::size_t px = static_cast<std::size_t>(r) * W + c;
                    if (blob_mask[px] || fb.gt.labels[px] == cls) ok = false;
                }
            if (!ok) continue;
            for (int r = r0 + 1; r <= r1 - 1; ++r)
                for (int c = c0 + 1; c <= c1 - 1; ++c)
                    if (placed.covers(r, c)) {
                        std::size_t px = static_cast<std::size_t>(r) * W + c;
                        fb.pred.labels[px] = static_cast<uint8_t>(cls);
                        fb.pixel_kind[px] = 2;
                        blob_mask[px] = 1;
                    }
            break;
        }
    }
    return fb;
}

ProbabilityVolume build_probability(const SceneSpec& spec, const FrameBuild& fb, uint64_t scene,
                                    int t) {
    const int H = spec.height, W = spec.width, q = spec.classes;
    ProbabilityVolume vol = ProbabilityVolume::zeros(H, W, q);

    // pixels within Chebyshev distance 2 of a ground-truth class edge
    std::vector<char> near_edge(static_cast<std::size_t>(H) * W, 0);
    for (int r = 0; r < H; ++r)
        for (int c = 0; c < W; ++c) {
            uint8_t center = fb.gt.at(r, c);
            bool edge = false;
            for (int dr = -2; dr <= 2 && !edge; ++dr)
                for (int dc = -2; dc <= 2 && !edge; ++dc) {
                    int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
                    if (fb.gt.at(rr, cc) != center) edge = true;
                }
            near_edge[static_cast<std::size_t>(r) * W + c] = edge;
        }

    std::vector<double> weight(q), mixture(q);
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            std::size_t px = static_cast<std::size_t>(r) * W + c;
            const uint8_t kind = fb.pixel_kind[px];
            const int pred = fb.pred.labels[px];
            const double xi = stream_uniform(scene, kNoiseTag, px, static_cast<uint64_t>(t));

            // neighbourhood label mixture; blobs have no local support
            std::fill(mixture.begin(), mixture.end(), 0.0);
            if (kind == 2) {
                for (int y = 0; y < q; ++y) mixture[y] = 1.0 / q;
            } else {
                int count = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        int rr = r + dr, cc = c + dc;
                        if (rr < 0 || rr >= H || cc < 0 || cc >= W) continue;
                        mixture[fb.gt.at(rr, cc)] += 1.0;
                        ++count;
                    }
                for (int y = 0; y < q; ++y)
                    mixture[y] = 0.85 * mixture[y] / count + 0.15 / q;
            }

            double u;
            switch (kind) {
                case 1: u = 0.30 + 0.30 * xi; break;   // swapped
                case 2: u = 0.04 + 0.45 * xi * xi; break;   // blob, mostly confident
                case 3: u = 0.28 + 0.17 * xi; break;   // suppressed
                default: u = spec.base_noise * (0.75 + 0.5 * xi); break;
            }

            if (kind == 3) {
                // mass split between the covering prediction and the
                // suppressed rare class
                for (int y = 0; y < q; ++y) weight[y] = 0.02 / q;
                weight[pred] += 0.98 * (1.0 - u);
                weight[fb.suppressed_to[px]] += 0.98 * u;
            } else {
                for (int y = 0; y < q; ++y) weight[y] = u * mixture[y];
                weight[pred] += 1.0 - u;
            }

            double temp = spec.temperature;
            if (kind == 0 && near_edge[px]) temp *= spec.boundary_temp_scale;
            const double exponent = 1.0 / std::max(temp, 1e-9);

            // sharpen relative to the maximum to stay in range
            double wmax = 0.0;
            for (int y = 0; y < q; ++y) wmax = std::max(wmax, weight[y]);
            double sum = 0.0;
            for (int y = 0; y < q; ++y) {
                double z = weight[y] / wmax;
                double powed = exponent > 600.0 ? (z == 1.0 ? 1.0 : 0.0)
                                                : std::pow(z, exponent);
                weight[y] = powed;
                sum += powed;
            }
            float* out = vol.pixel(r, c);
            for (int y = 0; y < q; ++y) out[y] = static_cast<float>(weight[y] / sum);
        }
    }
    return vol;
}

SynthFrame make_frame(const SceneSpec& spec, const std::vector<ShapeSpec>& shapes, uint64_t scene,
                      int t, std::string frame_id) {
    FrameBuild fb = build_labels(spec, shapes, scene, t);
    SynthFrame frame;
    frame.frame_id = std::move(frame_id);
    frame.probs = build_probability(spec, fb, scene, t);
    frame.gt = std::move(fb.gt);
    frame.gt_segments = extract_segments(frame.gt, nullptr, Source::ground_truth);
    frame.gt_segments.frame_id = frame.frame_id;
    frame.shapes = std::move(fb.traces);
    return frame;
}

}  // namespace

SynthFrame generate_frame(const SceneSpec& spec, int frame_index) {
    spec.validate();
    uint64_t scene = mix64(spec.seed, kSceneTag, static_cast<uint64_t>(frame_index));
    std::vector<ShapeSpec> shapes = sample_scene(spec, scene);
    return make_frame(spec, shapes, scene, 0, "f" + std::to_string(frame_index));
}

std::vector<SynthFrame> generate_sequence(const SceneSpec& spec, int length,
                                          uint64_t sequence_id) {
    spec.validate();
    if (length < 1) fail("BadConfig", "sequence length must be >= 1");
    uint64_t scene = mix64(spec.seed, kSceneTag + 1, sequence_id);
    std::vector<ShapeSpec> shapes = sample_scene(spec, scene);
    std::vector<SynthFrame> frames;
    frames.reserve(length);
    for (int t = 0; t < length; ++t)
        frames.push_back(make_frame(spec, shapes, scene, t,
                                    "s" + std::to_string(sequence_id) + ":" + std::to_string(t)));
    return frames;
}

LabelMap pseudo_reference_mask(const SceneSpec& spec, bool sequence_mode, uint64_t scene_id,
                               int frame_index) {
    uint64_t scene = sequence_mode ? mix64(spec.seed, kSceneTag + 1, scene_id)
                                   : mix64(spec.seed, kSceneTag, scene_id);
    std::vector<ShapeSpec> shapes = sample_scene(spec, scene);
    LabelMap mask = LabelMap::filled(spec.height, spec.width, 0);
    std::vector<int> no_owner;
    const int t = sequence_mode ? frame_index : 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        bool flickered = t > 0 && stream_uniform(scene, kFlickerTag, i,
                                                 static_cast<uint64_t>(t)) < spec.flicker_prob;
        if (flickered) continue;
        double jr = 0.0, jc = 0.0;
        if (stream_uniform(scene, kPseudoTag, i, static_cast<uint64_t>(t)) < 0.3) {
            uint64_t j = mix64(scene, kPseudoTag + 1, i, static_cast<uint64_t>(t));
            jr = static_cast<double>(static_cast<int>(j % 3) - 1);
            jc = static_cast<double>(static_cast<int>((j >> 8) % 3) - 1);
        }
        PlacedShape placed{&shapes[i], shapes[i].row + t * shapes[i].vel_r + jr,
                           shapes[i].col + t * shapes[i].vel_c + jc};
        paint(mask, no_owner, placed, static_cast<int>(i),
              static_cast<uint8_t>(shapes[i].class_id));
    }
    return mask;
}

std::vector<FrameEntry> write_synth_corpus(const SceneSpec& spec, const SynthCorpusOptions& opts,
                                           const std::string& out_dir) {
    spec.validate();
    if (opts.frames < 1) fail("BadConfig", "corpus needs at least one frame");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::vector<FrameEntry> entries;
    auto emit = [&](const SynthFrame& frame, const std::string& seq_name, int scene_id,
                    int frame_index) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s_f%03d", seq_name.c_str(), frame_index);
        std::string stem(buf);
        FrameEntry entry;
        entry.sequence_id = seq_name;
        entry.frame_index = frame_index;
        entry.probs_path = "probs_" + stem + ".npy";
        entry.gt_path = "gt_" + stem + ".npy";
        write_array(frame.probs.to_array(), (fs::path(out_dir) / entry.probs_path).string());
        write_array(frame.gt.to_array(), (fs::path(out_dir) / entry.gt_path).string());
        if (opts.emit_pseudo) {
            LabelMap pseudo = pseudo_reference_mask(spec, opts.sequence_mode,
                                                    static_cast<uint64_t>(scene_id), frame_index);
            entry.pseudo_path = "pseudo_" + stem + ".npy";
            write_array(pseudo.to_array(), (fs::path(out_dir) / entry.pseudo_path).string());
        }
        entries.push_back(std::move(entry));
    };

    if (opts.sequence_mode) {
        for (int s = 0; s < opts.frames; ++s) {
            char name[32];
            std::snprintf(name, sizeof(name), "s%04d", s);
            std::vector<SynthFrame> frames =
                generate_sequence(spec, opts.sequence_length, static_cast<uint64_t>(s));
            for (int t = 0; t < opts.sequence_length; ++t) emit(frames[t], name, s, t);
        }
    } else {
        for (int f = 0; f < opts.frames; ++f) {
            char name[32];
            std::snprintf(name, sizeof(name), "s%04d", f);
            emit(generate_frame(spec, f), name, f, 0);
        }
    }
    write_manifest(out_dir, entries);
    return entries;
}

}  // namespace segmeta
