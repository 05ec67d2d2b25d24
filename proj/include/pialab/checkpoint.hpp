#pragma once

#include <string>

#include "pialab/model.hpp"
#include "pialab/schedule.hpp"

namespace pialab {

struct Checkpoint {
  EpsilonModel model;
  NoiseSchedule sched;
};

// Binary container: magic "PIALAB01", little-endian u64 header length, JSON
// header (kind/shape/schedule), then one length-prefixed block of raw
// little-endian float64 per tensor, row-major. Same framing as dataset files.
void save_checkpoint(const EpsilonModel& model, const NoiseSchedule& sched,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pialab
