#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace segmeta {

// NPY v1.0 subset: little-endian float32 / int32 and uint8, C order only.
enum class Dtype { f32, i32, u8 };

const char* dtype_descr(Dtype d);  // "<f4", "<i4", "|u1"

struct Array {
    Dtype dtype = Dtype::f32;
    std::vector<std::size_t> shape;
    std::variant<std::vector<float>, std::vector<int32_t>, std::vector<uint8_t>> data;

    std::size_t element_count() const;
    std::size_t ndim() const { return shape.size(); }

    const std::vector<float>& f32() const { return std::get<std::vector<float>>(data); }
    const std::vector<int32_t>& i32() const { return std::get<std::vector<int32_t>>(data); }
    const std::vector<uint8_t>& u8() const { return std::get<std::vector<uint8_t>>(data); }

    static Array make_f32(std::vector<std::size_t> shape, std::vector<float> values);
    static Array make_i32(std::vector<std::size_t> shape, std::vector<int32_t> values);
    static Array make_u8(std::vector<std::size_t> shape, std::vector<uint8_t> values);

    bool operator==(const Array& other) const = default;
};

// Errors: BadMagic, UnsupportedVersion, HeaderMalformed, UnsupportedDtype,
// SizeMismatch (all ValidationError) and IoFailure (IoError).
Array read_array(const std::string& path);

// Header is space-padded so that its total length including the trailing
// newline is a multiple of 64; identical arrays produce identical bytes.
void write_array(const Array& a, const std::string& path);

}  // namespace segmeta
