#pragma once

namespace protohat {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace protohat
