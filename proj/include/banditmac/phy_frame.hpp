#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace banditmac {

using Complex = std::complex<double>;

inline constexpr std::size_t kConstellationSize = 4;
inline constexpr std::size_t kDefaultPreambleLength = 8;

// QPSK constellation in fixed order. The order doubles as the hard-decision
// tie-break order and as the default device-to-symbol assignment.
const std::array<Complex, kConstellationSize>& qpsk_constellation();

// One constellation point used as a device address.
struct DeviceIndex {
  Complex symbol;

  static DeviceIndex from_ordinal(std::size_t i);  // i in [0, 4)
  std::size_t ordinal() const;                     // position in the constellation order

  friend bool operator==(const DeviceIndex& a, const DeviceIndex& b) {
    return a.symbol == b.symbol;
  }
};

// Preamble symbols then the index symbol.
struct Frame {
  std::vector<Complex> preamble;
  Complex index;
};

// Known alternating pattern [1+1j, -1-1j, ...] of the given length.
std::vector<Complex> canonical_preamble(std::size_t length = kDefaultPreambleLength);

Frame encode_uplink(DeviceIndex index, std::size_t preamble_length = kDefaultPreambleLength);

// ACKs address the uplink sender by the complex conjugate of its index.
Frame encode_ack(DeviceIndex uplink_index, std::size_t preamble_length = kDefaultPreambleLength);

// Rotates every symbol by e^{i*theta} (channel phase offset).
Frame apply_phase_offset(const Frame& frame, double theta);

// Estimates the phase offset from the preamble, derotates, and slices the
// index symbol to the nearest constellation point (ties broken in
// constellation order). The sender must have used the canonical preamble of
// the same length.
DeviceIndex decode_frame(const Frame& received);

// True when a decoded ACK index addresses the device owning `own_index`.
bool is_ack_for(DeviceIndex decoded_ack_index, DeviceIndex own_index);

}  // namespace banditmac
