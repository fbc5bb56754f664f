#pragma once

#include <string>
#include <vector>

#include "nmp/net.hpp"

namespace nmp {

// Named dense networks with optimizer state, stored as text. Values are
// written with 17 significant digits so a double (and therefore any float
// network widened to double) round-trips exactly and training can resume
// from the file bit-for-bit.
struct NamedNetwork {
  std::string name;
  Mlp<double> net;
};

void save_checkpoint(const std::vector<NamedNetwork>& nets,
                     const std::string& path);
std::vector<NamedNetwork> load_checkpoint(const std::string& path);

bool has_network(const std::vector<NamedNetwork>& nets,
                 const std::string& name);
const Mlp<double>& find_network(const std::vector<NamedNetwork>& nets,
                                const std::string& name);

}  // namespace nmp
