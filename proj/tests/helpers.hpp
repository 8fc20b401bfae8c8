#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "core/grid.hpp"
#include "core/rng.hpp"

namespace testutil {

// unique scratch directory under the system temp root
inline std::string scratch_dir(const std::string& tag) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / ("segmeta_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

inline segmeta::LabelMap random_mask(segmeta::Rng& rng, int h, int w, int classes,
                                     double ignore_rate = 0.0) {
    segmeta::LabelMap m = segmeta::LabelMap::filled(h, w, 0);
    for (auto& v : m.labels) {
        if (ignore_rate > 0.0 && rng.uniform() < ignore_rate)
            v = segmeta::kIgnoreLabel;
        else
            v = static_cast<uint8_t>(rng.uniform_int(classes));
    }
    return m;
}

inline segmeta::ProbabilityVolume random_volume(segmeta::Rng& rng, int h, int w, int q) {
    segmeta::ProbabilityVolume p = segmeta::ProbabilityVolume::zeros(h, w, q);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            float* f = p.pixel(r, c);
            double sum = 0.0;
            for (int y = 0; y < q; ++y) {
                double v = -std::log(1.0 - rng.uniform());  // exponential
                f[y] = static_cast<float>(v);
                sum += v;
            }
            for (int y = 0; y < q; ++y) f[y] = static_cast<float>(f[y] / sum);
            // push residual rounding error into the largest entry
            double fsum = 0.0;
            int arg = 0;
            for (int y = 0; y < q; ++y) {
                fsum += f[y];
                if (f[y] > f[arg]) arg = y;
            }
            f[arg] += static_cast<float>(1.0 - fsum);
        }
    return p;
}

}  // namespace testutil
