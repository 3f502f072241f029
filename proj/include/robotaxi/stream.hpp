#pragma once

#include <memory>

#include "robotaxi/protocol.hpp"

namespace robotaxi {

/// Outbound half of one client connection. Owned by the transport; the
/// registry only stores it and the dispatch engine only writes to it.
class Stream {
 public:
  virtual ~Stream() = default;

  /// Queues `m` as one text frame. False once the connection is closed.
  virtual bool send(const protocol::Message& m) = 0;
  virtual bool is_open() const = 0;
};

using StreamHandle = std::shared_ptr<Stream>;

}  // namespace robotaxi
