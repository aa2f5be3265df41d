#pragma once

#include <ostream>

namespace dsrcnn {

struct SelftestOptions {
  /// Test hook: hand the library a kernel with one corrupted entry while the
  /// oracles keep the original, so the convolution checks must fail.
  bool corrupt_kernel = false;
};

/// Reduced-size gradient checks and oracle comparisons. Writes one line per
/// check and a summary; the transcript is identical across runs. Returns
/// true when every check passes.
bool run_selftest(std::ostream& out, const SelftestOptions& options = {});

}  // namespace dsrcnn
