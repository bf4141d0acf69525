#ifndef RANKDTE_VERSION_HPP
#define RANKDTE_VERSION_HPP

namespace rankdte {
inline constexpr const char* kVersion = "0.1.0";
}

#endif  // RANKDTE_VERSION_HPP
