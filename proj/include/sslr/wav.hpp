#pragma once

#include "sslr/signal.hpp"

#include <cstddef>
#include <filesystem>

namespace sslr {

enum class WavFormat { Float32, Pcm16 };

/// Reads 16-bit PCM or 32-bit IEEE float WAV (plain or extensible header),
/// any channel count. PCM samples are scaled by 1/32768.
MultichannelSignal read_wav(const std::filesystem::path& path);

/// Writes one WAV channel per signal channel, clipping to [-1, 1]. Returns
/// the number of clipped samples.
std::size_t write_wav(const MultichannelSignal& signal,
                      const std::filesystem::path& path,
                      WavFormat format = WavFormat::Float32);

}  // namespace sslr
