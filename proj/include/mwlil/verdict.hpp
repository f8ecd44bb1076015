#pragma once

#include <string_view>

namespace mwlil {

enum class CheckVerdict { Pass, Fail, Inconclusive };

inline std::string_view to_string(CheckVerdict v) {
    switch (v) {
        case CheckVerdict::Pass: return "pass";
        case CheckVerdict::Fail: return "fail";
        case CheckVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

}  // namespace mwlil
