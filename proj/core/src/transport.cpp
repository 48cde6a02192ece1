// Copyright 2026 The vnt Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may obtain a copy of the License at http://www.apache.org/licenses/LICENSE-2.0

#include "vnt/transport.hpp"

#include <algorithm>

namespace vnt {

void InMemoryTransport::send(Message message) {
  {
    std::lock_guard lock(mutex_);
    mailboxes_[message.to].push_back(std::move(message));
  }
  ready_.notify_all();
}

Message InMemoryTransport::recv(const std::string& receiver, const std::string& tag) {
  std::unique_lock lock(mutex_);
  for (;;) {
    auto& box = mailboxes_[receiver];
    const auto it = std::find_if(box.begin(), box.end(), [&](const Message& m) {
      return m.tag == tag;
    });
    if (it != box.end()) {
      Message out = std::move(*it);
      box.erase(it);
      return out;
    }
    ready_.wait(lock);
  }
}

}  // namespace vnt
