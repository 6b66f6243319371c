#define DOCTEST_CONFIG_IMPLEMENT
#include <cstring>
#include <string>

#include "doctest.h"
#include "rlmesh/runtime/experiment.hpp"

// Test binaries double as socket worker processes: the sockets transport
// re-executes the current binary with the `worker` argument.
int main(int argc, char** argv) {
  if (argc >= 2 && std::strcmp(argv[1], "worker") == 0) {
    std::string id, config;
    int port = 0;
    for (int i = 2; i + 1 < argc; i += 2) {
      std::string flag = argv[i];
      if (flag == "--id") id = argv[i + 1];
      if (flag == "--port") port = std::atoi(argv[i + 1]);
      if (flag == "--config") config = argv[i + 1];
    }
    try {
      auto cfg = rlmesh::ExperimentConfig::FromFile(config);
      return rlmesh::RunSocketActorWorker(cfg, id, port);
    } catch (...) {
      return 3;
    }
  }
  doctest::Context context(argc, argv);
  return context.run();
}
