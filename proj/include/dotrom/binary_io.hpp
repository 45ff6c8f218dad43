#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dotrom::binio {

// Little-endian primitives; throw IoError on short reads or failed writes.
void write_u8(std::ostream& out, std::uint8_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_magic(std::ostream& out, const char (&magic)[9]);

std::uint8_t read_u8(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
// Reads 8 bytes and compares them with the expected tag.
void expect_magic(std::istream& in, const char (&magic)[9], const std::string& what);

}  // namespace dotrom::binio
