#include "array.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace segmeta {

namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::f32:
        case Dtype::i32: return 4;
        case Dtype::u8: return 1;
    }
    return 0;
}

// Parses the python-literal dict emitted by the writer. Accepts arbitrary
// whitespace and key order, rejects anything else.
struct HeaderFields {
    std::string descr;
    bool fortran_order = false;
    std::vector<std::size_t> shape;
};

void skip_spaces(const std::string& s, std::size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n')) ++i;
}

bool consume(const std::string& s, std::size_t& i, char c) {
    skip_spaces(s, i);
    if (i < s.size() && s[i] == c) {
        ++i;
        return true;
    }
    return false;
}

std::string parse_quoted(const std::string& s, std::size_t& i) {
    skip_spaces(s, i);
    if (i >= s.size() || s[i] != '\'') fail("HeaderMalformed", "expected quoted string in npy header");
    std::size_t end = s.find('\'', i + 1);
    if (end == std::string::npos) fail("HeaderMalformed", "unterminated string in npy header");
    std::string out = s.substr(i + 1, end - i - 1);
    i = end + 1;
    return out;
}

HeaderFields parse_header(const std::string& header) {
    HeaderFields f;
    std::size_t i = 0;
    if (!consume(header, i, '{')) fail("HeaderMalformed", "npy header is not a dict");
    bool saw_descr = false, saw_order = false, saw_shape = false;
    for (;;) {
        skip_spaces(header, i);
        if (i < header.size() && header[i] == '}') break;
        std::string key = parse_quoted(header, i);
        if (!consume(header, i, ':')) fail("HeaderMalformed", "missing ':' in npy header");
        if (key == "descr") {
            f.descr = parse_quoted(header, i);
            saw_descr = true;
        } else if (key == "fortran_order") {
            skip_spaces(header, i);
            if (header.compare(i, 4, "True") == 0) {
                f.fortran_order = true;
                i += 4;
            } else if (header.compare(i, 5, "False") == 0) {
                f.fortran_order = false;
                i += 5;
            } else {
                fail("HeaderMalformed", "fortran_order must be True or False");
            }
            saw_order = true;
        } else if (key == "shape") {
            if (!consume(header, i, '(')) fail("HeaderMalformed", "shape is not a tuple");
            for (;;) {
                skip_spaces(header, i);
                if (i < header.size() && header[i] == ')') {
                    ++i;
                    break;
                }
                std::size_t start = i;
                while (i < header.size() && std::isdigit(static_cast<unsigned char>(header[i]))) ++i;
                if (i == start) fail("HeaderMalformed", "bad extent in npy shape");
                f.shape.push_back(std::stoull(header.substr(start, i - start)));
                skip_spaces(header, i);
                if (i < header.size() && header[i] == ',') ++i;
            }
            saw_shape = true;
        } else {
            fail("HeaderMalformed", "unknown key '" + key + "' in npy header");
        }
        if (!consume(header, i, ',')) {
            skip_spaces(header, i);
            break;
        }
    }
    if (!consume(header, i, '}')) fail("HeaderMalformed", "npy header dict not closed");
    if (!saw_descr || !saw_order || !saw_shape)
        fail("HeaderMalformed", "npy header misses a required key");
    return f;
}

Dtype dtype_from_descr(const std::string& descr) {
    if (descr == "<f4") return Dtype::f32;
    if (descr == "<i4") return Dtype::i32;
    if (descr == "|u1") return Dtype::u8;
    fail("UnsupportedDtype", "unsupported npy descr '" + descr + "'");
}

std::string shape_repr(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    if (shape.size() == 1) os << ',';
    os << ')';
    return os.str();
}

}  // namespace

const char* dtype_descr(Dtype d) {
    switch (d) {
        case Dtype::f32: return "<f4";
        case Dtype::i32: return "<i4";
        case Dtype::u8: return "|u1";
    }
    return "";
}

std::size_t Array::element_count() const {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

Array Array::make_f32(std::vector<std::size_t> shape, std::vector<float> values) {
    Array a;
    a.dtype = Dtype::f32;
    a.shape = std::move(shape);
    a.data = std::move(values);
    if (a.element_count() != a.f32().size()) fail("SizeMismatch", "element count does not match shape");
    return a;
}

Array Array::make_i32(std::vector<std::size_t> shape, std::vector<int32_t> values) {
    Array a;
    a.dtype = Dtype::i32;
    a.shape = std::move(shape);
    a.data = std::move(values);
    if (a.element_count() != a.i32().size()) fail("SizeMismatch", "element count does not match shape");
    return a;
}

Array Array::make_u8(std::vector<std::size_t> shape, std::vector<uint8_t> values) {
    Array a;
    a.dtype = Dtype::u8;
    a.shape = std::move(shape);
    a.data = std::move(values);
    if (a.element_count() != a.u8().size()) fail("SizeMismatch", "element count does not match shape");
    return a;
}

Array read_array(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("IoFailure", "cannot open '" + path + "' for reading");

    char magic[6];
    in.read(magic, 6);
    if (in.gcount() != 6 || std::memcmp(magic, kMagic, 6) != 0)
        fail("BadMagic", "'" + path + "' is not an npy file");

    unsigned char version[2];
    in.read(reinterpret_cast<char*>(version), 2);
    if (!in) fail("HeaderMalformed", "truncated npy version in '" + path + "'");
    if (version[0] != 1 || version[1] != 0)
        fail("UnsupportedVersion", "npy version " + std::to_string(version[0]) + "." +
                                       std::to_string(version[1]) + " not supported");

    unsigned char len_bytes[2];
    in.read(reinterpret_cast<char*>(len_bytes), 2);
    if (!in) fail("HeaderMalformed", "truncated npy header length in '" + path + "'");
    std::size_t header_len = static_cast<std::size_t>(len_bytes[0]) |
                             (static_cast<std::size_t>(len_bytes[1]) << 8);

    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    if (in.gcount() != static_cast<std::streamsize>(header_len))
        fail("HeaderMalformed", "truncated npy header in '" + path + "'");
    if (header.empty() || header.back() != '\n')
        fail("HeaderMalformed", "npy header not newline-terminated in '" + path + "'");

    HeaderFields fields = parse_header(header);
    if (fields.fortran_order)
        fail("HeaderMalformed", "fortran_order=True not supported ('" + path + "')");
    Dtype dtype = dtype_from_descr(fields.descr);

    Array a;
    a.dtype = dtype;
    a.shape = fields.shape;
    std::size_t count = a.element_count();
    std::size_t payload = count * dtype_size(dtype);

    std::vector<char> buf(payload);
    in.read(buf.data(), static_cast<std::streamsize>(payload));
    if (in.gcount() != static_cast<std::streamsize>(payload))
        fail("SizeMismatch", "payload of '" + path + "' shorter than the declared shape");
    char probe;
    in.read(&probe, 1);
    if (in.gcount() != 0)
        fail("SizeMismatch", "payload of '" + path + "' longer than the declared shape");

    switch (dtype) {
        case Dtype::f32: {
            std::vector<float> v(count);
            std::memcpy(v.data(), buf.data(), payload);
            a.data = std::move(v);
            break;
        }
        case Dtype::i32: {
            std::vector<int32_t> v(count);
            std::memcpy(v.data(), buf.data(), payload);
            a.data = std::move(v);
            break;
        }
        case Dtype::u8: {
            std::vector<uint8_t> v(count);
            std::memcpy(v.data(), buf.data(), payload);
            a.data = std::move(v);
            break;
        }
    }
    return a;
}

void write_array(const Array& a, const std::string& path) {
    std::size_t count = a.element_count();
    std::size_t stored = std::visit([](const auto& v) { return v.size(); }, a.data);
    if (stored != count) fail("SizeMismatch", "array data does not match its shape");

    std::string dict = std::string("{'descr': '") + dtype_descr(a.dtype) +
                       "', 'fortran_order': False, 'shape': " + shape_repr(a.shape) + ", }";
    // 10 bytes of magic+version+length precede the dict; pad to 64.
    std::size_t unpadded = 10 + dict.size() + 1;
    std::size_t padding = (64 - unpadded % 64) % 64;
    dict.append(padding, ' ');
    dict.push_back('\n');

    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail_io("IoFailure", "cannot open '" + tmp + "' for writing");
        out.write(kMagic, 6);
        unsigned char version[2] = {1, 0};
        out.write(reinterpret_cast<char*>(version), 2);
        unsigned char len_bytes[2] = {static_cast<unsigned char>(dict.size() & 0xff),
                                      static_cast<unsigned char>((dict.size() >> 8) & 0xff)};
        out.write(reinterpret_cast<char*>(len_bytes), 2);
        out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
        std::visit(
            [&](const auto& v) {
                out.write(reinterpret_cast<const char*>(v.data()),
                          static_cast<std::streamsize>(v.size() * sizeof(v[0])));
            },
            a.data);
        if (!out) fail_io("IoFailure", "write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail_io("IoFailure", "cannot move '" + tmp + "' to '" + path + "'");
}

}  // namespace segmeta
