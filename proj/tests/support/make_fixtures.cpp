// Regenerates data/fixtures from the scripted problems.

#include <iostream>

#include "fixtures.hpp"
#include "scale/serialize.hpp"

int main(int argc, char** argv) {
  const std::filesystem::path root = argc > 1 ? argv[1] : scale::fixtures::fixture_dir();
  for (const auto& f : scale::fixtures::build_all()) {
    scale::write_file(root / f.name / "dataset.jsonl", f.dataset);
    scale::write_file(root / f.name / "script.jsonl", f.script);
    std::cout << f.name << ": " << f.problems.size() << " problems\n";
  }
  return 0;
}
