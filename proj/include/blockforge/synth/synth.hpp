#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "blockforge/core/rng.hpp"
#include "blockforge/layout/box.hpp"

namespace blockforge {

/// Style names understood by the generator; each matches a keyword of the
/// offline style oracle.
const std::vector<std::string> &synth_styles();

struct SynthConfig {
  int count = 512;
  std::uint64_t seed = 42;
  int min_floors = 1;
  int max_floors = 4;
  double min_aspect = 0.55; // footprint depth / width
  double max_aspect = 1.0;
  int min_windows_per_wall = 1;
  int max_windows_per_wall = 3;
  std::vector<std::string> styles = synth_styles();
  int max_boxes = 32;
};

/// One procedurally generated building: floor slabs, four perimeter walls
/// per floor, windows embedded in walls, a ground-floor door, a roof and
/// optional extras, normalized to the unit cube.
BoxLayout synth_building(Rng &rng, const SynthConfig &config = {});

/// `config.count` buildings; record i uses the child stream split(i) of the
/// seed, so any record can be regenerated independently.
std::vector<BoxLayout> synth_dataset(const SynthConfig &config);

void write_synth_dataset(const SynthConfig &config, const std::filesystem::path &path);

} // namespace blockforge
