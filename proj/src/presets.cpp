#include "volterra/presets.hpp"

#include <stdexcept>

namespace volterra {

namespace {

struct Table {
    Complex first_poles[4];
    Complex first_coeffs[4];
    Complex second_poles1[2];
    Complex second_poles2[2];
    Complex second_coeffs[2];
};

AtomicModel from_table(const Table& t) {
    AtomicModel m;
    for (int i = 0; i < 4; ++i) m.first_order.push_back({{Pole(t.first_poles[i]), 1.0}, t.first_coeffs[i]});
    for (int i = 0; i < 2; ++i) {
        m.second_order.push_back({{Pole(t.second_poles1[i]), Pole(t.second_poles2[i]), 1.0}, t.second_coeffs[i]});
    }
    return m;
}

// clang-format off
constexpr Table kExample1{
    {{-0.1375, 0.2731}, {-0.1210, 0.3591}, {0.7844, 0.0577}, {-0.8890, -0.2277}},
    {{1.8969, 0.0618}, {0.2834, -0.6773}, {1.9874, -0.2800}, {0.2142, -0.0328}},
    {{0.2270, 0.1086}, {0.4978, -0.4239}},
    {{0.3591, -0.6873}, {-0.7062, 0.5511}},
    {{1.5449, -1.2369}, {1.7244, -0.9657}},
};

constexpr Table kExample2{
    {{-0.6019, 0.2180}, {0.4813, -0.4971}, {0.1924, -0.3459}, {0.8084, -0.0051}},
    {{-1.9283, -1.8763}, {-1.5213, -0.0245}, {1.8085, 1.4509}, {1.9034, -1.0285}},
    {{0.3966, 0.6776}, {0.0182, 0.0431}},
    {{-0.5943, -0.5600}, {0.5027, 0.3444}},
    {{0.5278, 0.2857}, {-1.0269, 1.9269}},
};
// clang-format on

}  // namespace

ExamplePreset load_preset(const std::string& name) {
    if (name == "example1") return {name, from_table(kExample1), 100, 11.2};
    if (name == "example2") return {name, from_table(kExample2), 150, 8.0};
    throw std::invalid_argument("unknown preset '" + name + "' (expected example1 or example2)");
}

std::vector<std::string> preset_names() { return {"example1", "example2"}; }

}  // namespace volterra
