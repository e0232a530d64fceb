#ifndef FLOWNET_KERNEL_HPP
#define FLOWNET_KERNEL_HPP

#include <cmath>
#include <limits>
#include <string>

#include "flownet/common.hpp"

namespace flownet {

enum class KernelKind { exponential, spherical, linear_sill };

inline KernelKind kernel_kind_from_string(const std::string& s) {
    if (s == "exponential") return KernelKind::exponential;
    if (s == "spherical") return KernelKind::spherical;
    if (s == "linear_sill" || s == "linear-sill") return KernelKind::linear_sill;
    throw validation_error("unknown kernel kind '" + s + "'");
}

inline std::string to_string(KernelKind k) {
    switch (k) {
        case KernelKind::exponential: return "exponential";
        case KernelKind::spherical: return "spherical";
        case KernelKind::linear_sill: return "linear_sill";
    }
    return "?";
}

// Covariance family: sill theta_s = C(0), range theta_r. Spherical and
// linear-with-sill have compact support [0, theta_r).
struct KernelSpec {
    KernelKind kind = KernelKind::exponential;
    double sill = 1.0;
    double range = 1.0;

    KernelSpec() = default;
    KernelSpec(KernelKind k, double theta_s, double theta_r)
        : kind(k), sill(theta_s), range(theta_r) {
        if (sill <= 0) throw validation_error("sill must be positive");
        if (range <= 0) throw validation_error("range must be positive");
    }

    bool compact_support() const { return kind != KernelKind::exponential; }

    // Distance beyond which C(h) is exactly zero.
    double support_radius() const {
        return compact_support() ? range : std::numeric_limits<double>::infinity();
    }
};

inline double kernel_cov(const KernelSpec& k, double h) {
    if (h < 0) throw validation_error("kernel distance must be nonnegative");
    double t = h / k.range;
    switch (k.kind) {
        case KernelKind::exponential:
            return k.sill * std::exp(-t);
        case KernelKind::spherical:
            return t >= 1.0 ? 0.0 : k.sill * (1.0 - 1.5 * t + 0.5 * t * t * t);
        case KernelKind::linear_sill:
            return t >= 1.0 ? 0.0 : k.sill * (1.0 - t);
    }
    return 0.0;
}

}  // namespace flownet

#endif
