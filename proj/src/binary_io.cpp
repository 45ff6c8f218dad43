#include "dotrom/binary_io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "dotrom/errors.hpp"

namespace dotrom::binio {

namespace {

template <class U>
void write_le(std::ostream& out, U v) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(U));
    if (!out) throw IoError("write failed");
}

template <class U>
U read_le(std::istream& in) {
    unsigned char buf[sizeof(U)];
    in.read(reinterpret_cast<char*>(buf), sizeof(U));
    if (in.gcount() != std::streamsize(sizeof(U))) throw IoError("unexpected end of file");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_u8(std::ostream& out, std::uint8_t v) { write_le(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { write_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { write_le(out, v); }
void write_f64(std::ostream& out, double v) { write_le(out, std::bit_cast<std::uint64_t>(v)); }

void write_magic(std::ostream& out, const char (&magic)[9]) {
    out.write(magic, 8);
    if (!out) throw IoError("write failed");
}

std::uint8_t read_u8(std::istream& in) { return read_le<std::uint8_t>(in); }
std::uint32_t read_u32(std::istream& in) { return read_le<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return read_le<std::uint64_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_le<std::uint64_t>(in)); }

void expect_magic(std::istream& in, const char (&magic)[9], const std::string& what) {
    char buf[8];
    in.read(buf, 8);
    if (in.gcount() != 8 || std::memcmp(buf, magic, 8) != 0) {
        throw IoError(what + ": bad magic, not a " + what + " file");
    }
}

}  // namespace dotrom::binio
