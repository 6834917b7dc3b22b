#include "detailnet/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "detailnet/errors.hpp"

namespace detailnet {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double mag = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * std::numbers::pi * u2;
    spare_ = mag * std::sin(ang);
    has_spare_ = true;
    return mag * std::cos(ang);
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << engine_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
    os.precision(17);
    os << spare_;
    return os.str();
}

void Rng::deserialize(const std::string& blob) {
    std::istringstream is(blob);
    int spare_flag = 0;
    is >> engine_ >> spare_flag >> spare_;
    if (is.fail()) {
        throw FormatError("rng: malformed state blob");
    }
    has_spare_ = spare_flag != 0;
}

}  // namespace detailnet
