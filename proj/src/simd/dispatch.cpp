#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fedplat/simd/kernels.hpp"

namespace fedplat::simd {

#ifndef FEDPLAT_HAVE_AVX2
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(__x86_64__) || defined(__i386__)
      return detail::avx2_table() != nullptr && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("kernel ISA not available: " +
                                std::string(isa_name(isa)));
  }
  return isa == Isa::avx2 ? *detail::avx2_table() : detail::scalar_table();
}

namespace {

const KernelTable& select_active() {
  if (const char* forced = std::getenv("FEDPLAT_SIMD")) {
    const std::string_view name(forced);
    if (name == "scalar") return detail::scalar_table();
    if (name == "avx2") return kernels_for(Isa::avx2);
  }
  return isa_available(Isa::avx2) ? *detail::avx2_table() : detail::scalar_table();
}

}  // namespace

const KernelTable& kernels() {
  static const KernelTable& active = select_active();
  return active;
}

}  // namespace fedplat::simd
