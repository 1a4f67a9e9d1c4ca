#include "qrlab/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace qrlab::kern {

bool cpu_supports_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const Ops* resolve() {
    const char* env = std::getenv("QRLAB_KERNELS");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar_ops;
#ifdef QRLAB_HAVE_AVX2
    if (env && std::strcmp(env, "avx2") == 0) return &avx2_ops;  // caller asserts support
    if (cpu_supports_avx2()) return &avx2_ops;
#endif
    return &scalar_ops;
}

}  // namespace

const Ops& ops() {
    static const Ops* active = resolve();
    return *active;
}

const char* backend_name() { return ops().name; }

}  // namespace qrlab::kern
