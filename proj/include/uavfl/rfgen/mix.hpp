#pragma once

#include <cstdint>

#include "uavfl/rfgen/iq_window.hpp"

namespace uavfl::rfgen {

/// Mixes a clean signal window with interference and complex white
/// Gaussian noise, scaled so that the measured signal power over the
/// measured total noise power equals the target SNR over the full window.
/// Passing interference == nullptr mixes against AWGN alone.
IQWindow mix_to_snr(const IQWindow& signal, const IQWindow* interference, double snr_db,
                    std::uint64_t seed);

}  // namespace uavfl::rfgen
