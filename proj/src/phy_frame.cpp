#include "banditmac/phy_frame.hpp"

#include <stdexcept>

namespace banditmac {

const std::array<Complex, kConstellationSize>& qpsk_constellation() {
  static const std::array<Complex, kConstellationSize> points = {
      Complex(1.0, 1.0), Complex(1.0, -1.0), Complex(-1.0, 1.0), Complex(-1.0, -1.0)};
  return points;
}

DeviceIndex DeviceIndex::from_ordinal(std::size_t i) {
  if (i >= kConstellationSize) throw std::out_of_range("DeviceIndex: ordinal out of range");
  return DeviceIndex{qpsk_constellation()[i]};
}

std::size_t DeviceIndex::ordinal() const {
  const auto& points = qpsk_constellation();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i] == symbol) return i;
  }
  throw std::invalid_argument("DeviceIndex: symbol is not a constellation point");
}

std::vector<Complex> canonical_preamble(std::size_t length) {
  std::vector<Complex> p(length);
  for (std::size_t i = 0; i < length; ++i) {
    p[i] = (i % 2 == 0) ? Complex(1.0, 1.0) : Complex(-1.0, -1.0);
  }
  return p;
}

Frame encode_uplink(DeviceIndex index, std::size_t preamble_length) {
  return Frame{canonical_preamble(preamble_length), index.symbol};
}

Frame encode_ack(DeviceIndex uplink_index, std::size_t preamble_length) {
  return Frame{canonical_preamble(preamble_length), std::conj(uplink_index.symbol)};
}

Frame apply_phase_offset(const Frame& frame, double theta) {
  const Complex rot = std::polar(1.0, theta);
  Frame out;
  out.preamble.reserve(frame.preamble.size());
  for (const Complex& s : frame.preamble) out.preamble.push_back(s * rot);
  out.index = frame.index * rot;
  return out;
}

DeviceIndex decode_frame(const Frame& received) {
  if (received.preamble.empty()) throw std::invalid_argument("decode_frame: empty preamble");
  const std::vector<Complex> known = canonical_preamble(received.preamble.size());

  // theta_hat = arg sum_i r_i * conj(p_i); exact for a pure rotation.
  Complex acc(0.0, 0.0);
  for (std::size_t i = 0; i < known.size(); ++i) {
    acc += received.preamble[i] * std::conj(known[i]);
  }
  const Complex derot = std::polar(1.0, -std::arg(acc));
  const Complex corrected = received.index * derot;

  const auto& points = qpsk_constellation();
  std::size_t best = 0;
  double best_d = std::norm(corrected - points[0]);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double d = std::norm(corrected - points[i]);
    if (d < best_d) {  // strict: ties keep the earlier constellation point
      best_d = d;
      best = i;
    }
  }
  return DeviceIndex{points[best]};
}

bool is_ack_for(DeviceIndex decoded_ack_index, DeviceIndex own_index) {
  return decoded_ack_index.symbol == std::conj(own_index.symbol);
}

}  // namespace banditmac
