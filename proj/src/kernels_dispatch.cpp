#include <atomic>
#include <cstdlib>
#include <string>

#include "tusla/errors.hpp"
#include "tusla/kernels.hpp"

namespace tusla::kernels {

#ifdef TUSLA_HAVE_AVX2
const KernelTable* avx2_table();
#endif

const KernelTable* avx2() {
#ifdef TUSLA_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* pick(std::string_view name) {
  if (name == "scalar") return &scalar();
  if (name == "avx2") return avx2();
  return nullptr;
}

const KernelTable* initial() {
  if (const char* env = std::getenv("TUSLA_KERNELS"); env != nullptr && *env != '\0') {
    if (const KernelTable* t = pick(env)) return t;
  }
  if (const KernelTable* t = avx2()) return t;
  return &scalar();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{initial()};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void select(std::string_view name) {
  const KernelTable* t = pick(name);
  if (t == nullptr) {
    throw UsageError("kernel variant '" + std::string(name) + "' is unknown or unsupported");
  }
  slot().store(t, std::memory_order_release);
}

}  // namespace tusla::kernels
