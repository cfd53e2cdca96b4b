#pragma once

#include "ttb/tensor.hpp"

#include <iosfwd>
#include <string>

namespace ttb {

// Binary formats, all integers and floats little-endian:
//   .ttn  "TTN1" | u32 order D | D x u32 dims | f64 payload, first index fastest
//   .ttm  "TTM1" | u32 order D | D x u32 dims | u8 payload in {0, 1}

void write_tensor(std::ostream& out, const DenseTensor& t);
DenseTensor read_tensor(std::istream& in);
void save_tensor(const std::string& path, const DenseTensor& t);
DenseTensor load_tensor(const std::string& path);

void write_mask(std::ostream& out, const MaskTensor& m);
MaskTensor read_mask(std::istream& in);
void save_mask(const std::string& path, const MaskTensor& m);
MaskTensor load_mask(const std::string& path);

namespace binio {
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
void put_magic(std::ostream& out, const char (&magic)[5]);
void expect_magic(std::istream& in, const char (&magic)[5]);
}  // namespace binio

}  // namespace ttb
