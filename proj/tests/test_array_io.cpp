#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "core/array.hpp"
#include "core/corpus.hpp"
#include "core/error.hpp"
#include "core/grid.hpp"
#include "core/rng.hpp"
#include "helpers.hpp"

using namespace segmeta;
namespace fs = std::filesystem;

namespace {

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("npy round trip is bit exact") {
    std::string dir = testutil::scratch_dir("npy");
    Array a = Array::make_f32({2, 3}, {1.0f, 2.0f, 3.0f, -4.5f, 0.0f, 1e-7f});
    std::string path = dir + "/a.npy";
    write_array(a, path);
    Array b = read_array(path);
    CHECK(a == b);
}

TEST_CASE("npy round trip property over random dtype/shape matrix") {
    std::string dir = testutil::scratch_dir("npy_prop");
    Rng rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<std::size_t> shape;
        int ndim = static_cast<int>(rng.uniform_int(4));  // 0-d through 3-d
        std::size_t count = 1;
        for (int d = 0; d < ndim; ++d) {
            std::size_t extent = rng.uniform_int(5);  // extents may be zero
            shape.push_back(extent);
            count *= extent;
        }
        Array a;
        switch (rng.uniform_int(3)) {
            case 0: {
                std::vector<float> v(count);
                for (auto& x : v) x = static_cast<float>(rng.normal());
                a = Array::make_f32(shape, std::move(v));
                break;
            }
            case 1: {
                std::vector<int32_t> v(count);
                for (auto& x : v) x = static_cast<int32_t>(rng.next_u64());
                a = Array::make_i32(shape, std::move(v));
                break;
            }
            default: {
                std::vector<uint8_t> v(count);
                for (auto& x : v) x = static_cast<uint8_t>(rng.uniform_int(256));
                a = Array::make_u8(shape, std::move(v));
                break;
            }
        }
        std::string path = dir + "/t" + std::to_string(trial) + ".npy";
        write_array(a, path);
        CHECK(read_array(path) == a);
        // deterministic writer: same array, same bytes
        std::string twin = path + ".twin";
        write_array(a, twin);
        CHECK(read_bytes(path) == read_bytes(twin));
    }
}

TEST_CASE("hand-built v1.0 header parses to the declared payload") {
    std::string dir = testutil::scratch_dir("npy_hand");
    std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (1,), }";
    std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');
    std::string bytes = std::string("\x93NUMPY", 6);
    bytes.push_back('\x01');
    bytes.push_back('\x00');
    bytes.push_back(static_cast<char>(header.size() & 0xff));
    bytes.push_back(static_cast<char>(header.size() >> 8));
    bytes += header;
    bytes.append(4, '\0');  // one float32 zero
    std::string path = dir + "/hand.npy";
    {
        std::ofstream out(path, std::ios::binary);
        out << bytes;
    }
    Array a = read_array(path);
    CHECK(a.dtype == Dtype::f32);
    CHECK(a.shape == std::vector<std::size_t>{1});
    CHECK(a.f32()[0] == 0.0f);

    // our writer must agree with the hand-built layout byte for byte
    std::string ours = dir + "/ours.npy";
    write_array(Array::make_f32({1}, {0.0f}), ours);
    CHECK(read_bytes(ours) == bytes);
}

TEST_CASE("npy error paths") {
    std::string dir = testutil::scratch_dir("npy_err");
    SUBCASE("bad magic") {
        std::string path = dir + "/bad.npy";
        std::ofstream(path, std::ios::binary) << "NOTNUMPYDATA";
        CHECK_THROWS_WITH_AS(read_array(path), doctest::Contains("not an npy"), ValidationError);
    }
    SUBCASE("unsupported version") {
        std::string path = dir + "/v2.npy";
        std::string bytes = std::string("\x93NUMPY", 6);
        bytes.push_back('\x02');
        bytes.push_back('\x00');
        bytes += std::string("\x02\x00", 2);
        bytes += "{}";
        std::ofstream(path, std::ios::binary) << bytes;
        try {
            read_array(path);
            FAIL("expected UnsupportedVersion");
        } catch (const ValidationError& e) {
            CHECK(e.code() == "UnsupportedVersion");
        }
    }
    SUBCASE("short payload raises SizeMismatch") {
        std::string good = dir + "/good.npy";
        write_array(Array::make_f32({2, 2}, {1, 2, 3, 4}), good);
        std::string bytes = read_bytes(good);
        std::ofstream(dir + "/short.npy", std::ios::binary)
            << bytes.substr(0, bytes.size() - 8);
        try {
            read_array(dir + "/short.npy");
            FAIL("expected SizeMismatch");
        } catch (const ValidationError& e) {
            CHECK(e.code() == "SizeMismatch");
        }
    }
    SUBCASE("fortran order rejected") {
        std::string header = "{'descr': '<f4', 'fortran_order': True, 'shape': (1,), }";
        std::size_t unpadded = 10 + header.size() + 1;
        header.append((64 - unpadded % 64) % 64, ' ');
        header.push_back('\n');
        std::string bytes = std::string("\x93NUMPY", 6);
        bytes.push_back('\x01');
        bytes.push_back('\x00');
        bytes.push_back(static_cast<char>(header.size() & 0xff));
        bytes.push_back(static_cast<char>(header.size() >> 8));
        bytes += header;
        bytes.append(4, '\0');
        std::string path = dir + "/fortran.npy";
        std::ofstream(path, std::ios::binary) << bytes;
        CHECK_THROWS_AS(read_array(path), ValidationError);
    }
}

TEST_CASE("scalar and label examples") {
    std::string dir = testutil::scratch_dir("npy_scalar");
    write_array(Array::make_f32({}, {1.0f}), dir + "/scalar.npy");
    Array s = read_array(dir + "/scalar.npy");
    CHECK(s.shape.empty());
    CHECK(s.f32()[0] == 1.0f);

    write_array(Array::make_u8({2, 2}, {0, 1, 2, 255}), dir + "/labels.npy");
    Array l = read_array(dir + "/labels.npy");
    CHECK(l.u8() == std::vector<uint8_t>{0, 1, 2, 255});
}

TEST_CASE("probability volumes are validated on load") {
    std::string dir = testutil::scratch_dir("npy_prob");
    SUBCASE("bad sum rejected") {
        write_array(Array::make_f32({1, 1, 2}, {0.6f, 0.6f}), dir + "/bad.npy");
        CHECK_THROWS_AS(ProbabilityVolume::from_array(read_array(dir + "/bad.npy")),
                        ValidationError);
    }
    SUBCASE("nan rejected") {
        write_array(Array::make_f32({1, 1, 2}, {std::nanf(""), 1.0f}), dir + "/nan.npy");
        CHECK_THROWS_AS(ProbabilityVolume::from_array(read_array(dir + "/nan.npy")),
                        ValidationError);
    }
    SUBCASE("sum within 1e-4 accepted") {
        write_array(Array::make_f32({1, 1, 2}, {0.49998f, 0.50003f}), dir + "/ok.npy");
        CHECK_NOTHROW(ProbabilityVolume::from_array(read_array(dir + "/ok.npy")));
    }
}

namespace {

void write_frame_files(const std::string& dir, std::vector<FrameEntry>& frames,
                       const std::string& seq, int index) {
    FrameEntry f;
    f.sequence_id = seq;
    f.frame_index = index;
    f.probs_path = "p_" + seq + "_" + std::to_string(index) + ".npy";
    write_array(Array::make_f32({1, 1, 2}, {0.5f, 0.5f}), dir + "/" + f.probs_path);
    frames.push_back(f);
}

}  // namespace

TEST_CASE("corpus split determinism and ratios") {
    std::string dir = testutil::scratch_dir("corpus");
    std::vector<FrameEntry> frames;
    for (int i = 0; i < 10; ++i) write_frame_files(dir, frames, "s" + std::to_string(i), 0);
    write_manifest(dir, frames);

    CorpusConfig cfg;
    cfg.ratios = {0.8, 0.2};
    cfg.split_names = {"train", "test"};
    cfg.seed = 7;
    CorpusLayout a = load_corpus(dir, cfg);
    CHECK(a.split_members[0].size() == 8);
    CHECK(a.split_members[1].size() == 2);
    CorpusLayout b = load_corpus(dir, cfg);
    for (std::size_t i = 0; i < a.frames.size(); ++i)
        CHECK(a.frames[i].split == b.frames[i].split);

    // every frame in exactly one split
    std::vector<int> seen(a.frames.size(), 0);
    for (const auto& members : a.split_members)
        for (std::size_t f : members) ++seen[f];
    for (int count : seen) CHECK(count == 1);

    CorpusConfig three;
    three.ratios = {0.7, 0.1, 0.2};
    three.split_names = {"train", "val", "test"};
    CorpusLayout c = load_corpus(dir, three);
    CHECK(c.split_members[0].size() == 7);
    CHECK(c.split_members[1].size() == 1);
    CHECK(c.split_members[2].size() == 2);
}

TEST_CASE("split sizes use floor then declared-order remainders") {
    CHECK(split_sizes(10, {0.8, 0.2}) == std::vector<std::size_t>{8, 2});
    CHECK(split_sizes(10, {0.7, 0.1, 0.2}) == std::vector<std::size_t>{7, 1, 2});
    CHECK(split_sizes(9, {0.7, 0.1, 0.2}) == std::vector<std::size_t>{7, 1, 1});
    CHECK(split_sizes(1, {0.5, 0.5}) == std::vector<std::size_t>{1, 0});
}

TEST_CASE("corpus manifest errors") {
    std::string dir = testutil::scratch_dir("corpus_err");
    SUBCASE("missing probs file") {
        std::vector<FrameEntry> frames;
        FrameEntry f;
        f.sequence_id = "s0";
        f.frame_index = 0;
        f.probs_path = "absent.npy";
        frames.push_back(f);
        write_manifest(dir, frames);
        try {
            load_corpus(dir, CorpusConfig{});
            FAIL("expected MissingFrame");
        } catch (const ValidationError& e) {
            CHECK(e.code() == "MissingFrame");
        }
    }
    SUBCASE("duplicate frame id") {
        std::vector<FrameEntry> frames;
        write_frame_files(dir, frames, "s0", 0);
        frames.push_back(frames[0]);
        write_manifest(dir, frames);
        try {
            load_corpus(dir, CorpusConfig{});
            FAIL("expected DuplicateFrameId");
        } catch (const ValidationError& e) {
            CHECK(e.code() == "DuplicateFrameId");
        }
    }
}
