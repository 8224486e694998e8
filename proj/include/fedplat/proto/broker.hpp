#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace fedplat::proto {

struct Message {
  std::string topic;
  std::string payload;
  bool retained = false;  // replayed from the retained store
};

class ConnectionRefused : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BrokerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One client's connection. publish() may block while a subscriber queue is
// full. Deliveries are read with receive(); after close() it returns nullopt.
class Session {
 public:
  virtual ~Session() = default;

  virtual const std::string& client_id() const = 0;
  virtual void publish(const std::string& topic, const std::string& payload, bool retain) = 0;
  // Returns false when the broker refused the subscription.
  virtual bool subscribe(const std::string& filter) = 0;
  virtual std::optional<Message> receive(std::chrono::steady_clock::time_point deadline) = 0;
  virtual void close() = 0;
};

class Broker {
 public:
  virtual ~Broker() = default;
  // Throws ConnectionRefused for an unknown client id.
  virtual std::unique_ptr<Session> connect(const std::string& client_id) = 0;
};

}  // namespace fedplat::proto
