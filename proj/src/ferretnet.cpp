#include "ferret/ferretnet.hpp"

namespace ferret::net {

FerretVariant variant_from_string(const std::string& name) {
    if (name == "s" || name == "S") return {"s", {32, 64}, {2, 2}};
    if (name == "b" || name == "B") return {"b", {96, 192}, {2, 2}};
    if (name == "l" || name == "L") return {"l", {96, 192, 384, 768}, {2, 2, 6, 2}};
    throw std::invalid_argument("unknown variant: " + name + " (expected s, b or l)");
}

}  // namespace ferret::net
