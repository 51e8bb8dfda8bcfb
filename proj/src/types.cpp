#include "atex/types.hpp"

#include <cmath>
#include <cstdio>

namespace atex {

std::string Rational::to_fixed4() const {
    // Scale to 1e4 with integer arithmetic, round half away from zero.
    const bool neg = num < 0;
    const std::int64_t n = neg ? -num : num;
    const std::int64_t scaled = (n * 10000 + den / 2) / den;
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%s%lld.%04lld", neg ? "-" : "",
                  static_cast<long long>(scaled / 10000), static_cast<long long>(scaled % 10000));
    return buf;
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

}  // namespace atex
