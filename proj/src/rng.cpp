#include "npghm/rng.hpp"

namespace npghm {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng make_stream(std::uint64_t master_seed, Stream stream) {
  const auto id = static_cast<std::uint64_t>(stream);
  return Rng(splitmix64(splitmix64(master_seed) ^ splitmix64(id * 0x632be59bd9b4e019ULL)));
}

Rng make_stream(std::uint64_t master_seed, std::string_view label) {
  // FNV-1a over the label, then the same mixing as the enum streams.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return Rng(splitmix64(splitmix64(master_seed) ^ splitmix64(h)));
}

}  // namespace npghm
