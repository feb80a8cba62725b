#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "telspin/fit.hpp"
#include "telspin/params.hpp"

namespace telspin {

// Sampled coherence decay with provenance.  std_error is populated only by
// the Monte Carlo engine; seed/n_traj stay zero for deterministic engines.
// A fit can be attached after the fact; it never feeds back into the data.
struct DecayCurve {
  std::string engine;  // "analytic" | "mc" | "lindblad"
  FluctuatorParams params;
  std::uint64_t seed = 0;
  std::size_t n_traj = 0;
  std::vector<double> times_us;
  std::vector<std::complex<double>> values;
  std::vector<double> std_error;
  std::optional<FitResult> fit;
};

}  // namespace telspin
