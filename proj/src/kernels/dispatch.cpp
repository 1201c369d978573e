#include "oim/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace oim::kernels {

const Ops* avx2_ops_impl();  // avx2.cpp; null when unavailable

const Ops* avx2_ops() { return avx2_ops_impl(); }

namespace {
std::atomic<const Ops*> g_active{nullptr};
}

const Ops& active_ops() {
    const Ops* cur = g_active.load(std::memory_order_acquire);
    if (cur) return *cur;
    const Ops* sel = nullptr;
    if (const char* env = std::getenv("OIM_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) sel = &scalar_ops();
        else if (std::strcmp(env, "avx2") == 0) sel = avx2_ops();
    }
    if (!sel) sel = avx2_ops() ? avx2_ops() : &scalar_ops();
    g_active.store(sel, std::memory_order_release);
    return *sel;
}

void set_active(const Ops& ops) { g_active.store(&ops, std::memory_order_release); }

}  // namespace oim::kernels
