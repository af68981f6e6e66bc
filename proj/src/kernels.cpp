#include "hessianlab/kernels.hpp"

namespace hessianlab::kern {

const KernelOps* avx_ops_table();  // defined in kernels_avx.cpp

const KernelOps* simd_ops() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx") && __builtin_cpu_supports("fma")) return avx_ops_table();
#endif
    return nullptr;
}

const KernelOps& ops() {
    static const KernelOps* selected = [] {
        const KernelOps* simd = simd_ops();
        return simd ? simd : &scalar_ops();
    }();
    return *selected;
}

}  // namespace hessianlab::kern
