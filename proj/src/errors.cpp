#include "cpekit/errors.hpp"

namespace cpekit {

void require(bool condition, const std::string& message) {
    if (!condition) throw InputError(message);
}

}  // namespace cpekit
