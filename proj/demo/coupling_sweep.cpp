// Runs the beam experiment once per coupling method and prints the error table.
#include "contactrom/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>

int main(int argc, char** argv) {
  using namespace contactrom;
  const std::string path = argc > 1 ? argv[1] : "demo/beam.ini";
  try {
    ExperimentConfig cfg = parse_config(path);
    std::printf("%-14s %12s %12s %12s %8s %8s\n", "coupling", "max eps_qB", "max eps_qI",
                "max eps_lam", "events", "offset");
    for (auto method : {CouplingMethod::static_modes, CouplingMethod::full_lsq,
                        CouplingMethod::reduced_lsq}) {
      cfg.coupling = method;
      const auto start = std::chrono::steady_clock::now();
      const ExperimentResult r = run_experiment(cfg);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const auto& e = r.errors;
      std::printf("%-14s %12.3e %12.3e %12.3e %8zu %8ld   (%.2f s)\n", to_string(method).c_str(),
                  e.q_boundary.max(), e.q_interior.max(), e.lambda ? e.lambda->max() : 0.0,
                  e.fom_contact.events.size(), long(e.event_offset), s);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
