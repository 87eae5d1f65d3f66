#pragma once

#include <cstddef>
#include <cstdint>

namespace promnet {

// CRC-32 (IEEE, reflected, poly 0xEDB88320). crc32("123456789") == 0xCBF43926.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

}  // namespace promnet
