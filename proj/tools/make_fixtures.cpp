// SPDX-License-Identifier: Apache-2.0
// Regenerates the bundled politics fixture: make_fixtures <dir> [seed]
#include <cstdlib>
#include <iostream>
#include <string>

#include "ordspec/polfixture.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || argc > 3) {
    std::cerr << "usage: make_fixtures <dir> [seed]\n";
    return 1;
  }
  const std::uint64_t seed = argc == 3 ? std::stoull(argv[2]) : 20190601ULL;
  const auto fx = ordspec::pol::make_politics_fixture(seed);
  ordspec::pol::write_politics_fixture(fx, argv[1]);
  std::cout << "wrote " << fx.manifestos.size() << " sentences, " << fx.gold.size() << " manifestos to " << argv[1]
            << '\n';
  return 0;
}
