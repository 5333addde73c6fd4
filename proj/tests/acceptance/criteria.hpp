#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace acceptance {

struct Criterion {
    int number;
    std::string label;
    std::function<void()> run;  // throws Failure with a reason
};

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const std::vector<Criterion>& criteria();

}  // namespace acceptance
