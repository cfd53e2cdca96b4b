#include "ttb/tensor_io.hpp"

#include "ttb/errors.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace ttb {

namespace binio {

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(b.data(), b.size());
}

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    out.write(b.data(), b.size());
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) throw FormatError("unexpected end of file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) throw FormatError("unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

void expect_magic(std::istream& in, const char (&magic)[5]) {
    char got[4] = {};
    if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0)
        throw FormatError(std::string("bad magic, expected ") + magic);
}

}  // namespace binio

namespace {

void write_header(std::ostream& out, const char (&magic)[5], const Dims& dims) {
    binio::put_magic(out, magic);
    binio::put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (auto d : dims) binio::put_u32(out, static_cast<std::uint32_t>(d));
}

Dims read_header(std::istream& in, const char (&magic)[5]) {
    binio::expect_magic(in, magic);
    const auto order = binio::get_u32(in);
    if (order == 0 || order > 64) throw FormatError("implausible tensor order");
    Dims dims(order);
    for (auto& d : dims) {
        d = binio::get_u32(in);
        if (d == 0) throw FormatError("zero dimension in header");
    }
    return dims;
}

template <class T, class Writer>
void save_file(const std::string& path, const T& value, Writer write) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path + " for writing");
    write(out, value);
    if (!out) throw FormatError("write failed: " + path);
}

template <class Reader>
auto load_file(const std::string& path, Reader read) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    return read(in);
}

}  // namespace

void write_tensor(std::ostream& out, const DenseTensor& t) {
    write_header(out, "TTN1", t.dims());
    for (double v : t.data()) binio::put_f64(out, v);
}

DenseTensor read_tensor(std::istream& in) {
    Dims dims = read_header(in, "TTN1");
    std::vector<double> data(num_elements(dims));
    for (auto& v : data) v = binio::get_f64(in);
    return DenseTensor(std::move(dims), std::move(data));
}

void write_mask(std::ostream& out, const MaskTensor& m) {
    write_header(out, "TTM1", m.dims());
    out.write(reinterpret_cast<const char*>(m.bits().data()),
              static_cast<std::streamsize>(m.bits().size()));
}

MaskTensor read_mask(std::istream& in) {
    Dims dims = read_header(in, "TTM1");
    std::vector<std::uint8_t> bits(num_elements(dims));
    if (!in.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size())))
        throw FormatError("truncated mask payload");
    for (auto b : bits)
        if (b > 1) throw FormatError("mask payload must contain only 0 or 1");
    return MaskTensor(std::move(dims), std::move(bits));
}

void save_tensor(const std::string& path, const DenseTensor& t) {
    save_file(path, t, [](std::ostream& o, const DenseTensor& v) { write_tensor(o, v); });
}
DenseTensor load_tensor(const std::string& path) {
    return load_file(path, [](std::istream& i) { return read_tensor(i); });
}
void save_mask(const std::string& path, const MaskTensor& m) {
    save_file(path, m, [](std::ostream& o, const MaskTensor& v) { write_mask(o, v); });
}
MaskTensor load_mask(const std::string& path) {
    return load_file(path, [](std::istream& i) { return read_mask(i); });
}

}  // namespace ttb
