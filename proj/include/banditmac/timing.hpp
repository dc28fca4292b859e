#pragma once

namespace banditmac {

// All values in seconds. Invariant (enforced at scenario validation):
// ack_delay + ack_duration < inter_message_period, all fields positive.
struct MacTiming {
  double uplink_duration = 0.5;
  double ack_delay = 1.0;
  double ack_duration = 0.5;
  double inter_message_period = 5.0;
};

}  // namespace banditmac
