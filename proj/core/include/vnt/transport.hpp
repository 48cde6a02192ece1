// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <vector>

namespace vnt {

struct Message {
  std::string from;
  std::string to;
  std::string tag;
  std::vector<std::uint8_t> payload;
};

// Boundary between simulated workers. State migration moves serialized
// bytes through here, so a socket-backed implementation can be swapped in
// without touching the migration logic.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(Message message) = 0;
  // Blocks until a message with the given tag arrives for the receiver.
  virtual Message recv(const std::string& receiver, const std::string& tag) = 0;
};

class InMemoryTransport final : public Transport {
 public:
  void send(Message message) override;
  Message recv(const std::string& receiver, const std::string& tag) override;

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::map<std::string, std::deque<Message>> mailboxes_;
};

}  // namespace vnt
