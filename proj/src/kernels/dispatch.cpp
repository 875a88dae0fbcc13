#include <cstdlib>
#include <string>

#include "asd/error.hpp"
#include "asd/kernels.hpp"

namespace asd::kernels {

#if !defined(ASD_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(ASD_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif

namespace {

const KernelTable* table_for(Isa isa) {
    switch (isa) {
        case Isa::scalar: return &scalar_table();
        case Isa::avx2: return avx2_table();
        case Isa::neon: return neon_table();
    }
    return nullptr;
}

bool cpu_supports(Isa isa) {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2:
#if defined(ASD_HAVE_AVX2)
            __builtin_cpu_init();
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Isa::neon:
#if defined(ASD_HAVE_NEON)
            return true;  // mandatory on aarch64
#else
            return false;
#endif
    }
    return false;
}

Isa parse_isa(const std::string& name) {
    if (name == "scalar") return Isa::scalar;
    if (name == "avx2") return Isa::avx2;
    if (name == "neon") return Isa::neon;
    throw ConfigError("ASD_KERNELS: unknown kernel set '" + name + "'");
}

const KernelTable* resolve_default() {
    if (const char* env = std::getenv("ASD_KERNELS"); env && std::string(env) != "auto" &&
                                                     std::string(env) != "") {
        const Isa isa = parse_isa(env);
        if (!isa_available(isa)) {
            throw ConfigError("ASD_KERNELS=" + std::string(env) + " is not available on this CPU");
        }
        return table_for(isa);
    }
    for (Isa isa : {Isa::avx2, Isa::neon}) {
        if (isa_available(isa)) return table_for(isa);
    }
    return &scalar_table();
}

const KernelTable*& current() {
    static const KernelTable* table = resolve_default();
    return table;
}

}  // namespace

bool isa_available(Isa isa) { return table_for(isa) != nullptr && cpu_supports(isa); }

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "unknown";
}

const KernelTable& active() { return *current(); }

void select(Isa isa) {
    if (!isa_available(isa)) {
        throw ConfigError("kernel set '" + std::string(isa_name(isa)) + "' is not available");
    }
    current() = table_for(isa);
}

}  // namespace asd::kernels
