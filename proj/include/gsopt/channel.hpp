#pragma once

#include "common.hpp"

namespace gsopt {

// AWGN channel at a given Es/N0 with Es = 1: Y = X + Z, Z ~ CN(0, n0).
struct ChannelSpec {
  double snr_db = 0.0;
  double snr_linear = 1.0;
  double n0 = 1.0;

  static ChannelSpec from_db(double snr_db) {
    if (!is_finite(snr_db)) throw InputError("SNR must be finite");
    const double lin = db_to_linear(snr_db);
    return {snr_db, lin, 1.0 / lin};
  }

  // Channel with an explicit noise variance (used for scaled-constellation identities).
  static ChannelSpec from_n0(double n0) {
    if (!(n0 > 0.0) || !is_finite(n0)) throw InputError("noise variance must be positive");
    return {linear_to_db(1.0 / n0), 1.0 / n0, n0};
  }
};

// Shannon capacity of the complex AWGN channel, bit per 2D symbol.
inline double awgn_capacity(double snr_db) { return std::log2(1.0 + db_to_linear(snr_db)); }

}  // namespace gsopt
