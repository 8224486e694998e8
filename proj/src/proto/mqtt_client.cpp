#include "fedplat/proto/mqtt_client.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <boost/asio.hpp>
#include <boost/asio/ssl.hpp>
#include <spdlog/spdlog.h>

#include "fedplat/proto/mqtt_packets.hpp"
#include "fedplat/proto/topics.hpp"
#include "fedplat/util/blocking_queue.hpp"

namespace fedplat::proto {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

using Plain = tcp::socket;
using Tls = asio::ssl::stream<tcp::socket>;

tcp::socket& lowest(Plain& s) { return s; }
tcp::socket& lowest(Tls& s) { return s.next_layer(); }

// All socket I/O runs on one io_context thread; callers hand work to it with
// post(), which keeps the TLS stream single-threaded.
template <typename Stream>
class AsioSession : public Session {
 public:
  AsioSession(const MqttEndpoint& ep, std::string client_id, std::unique_ptr<asio::ssl::context> ssl)
      : ep_(ep),
        client_id_(std::move(client_id)),
        ssl_(std::move(ssl)),
        stream_(make_stream()),
        keepalive_(ioc_),
        deliveries_(ep.queue_capacity) {}

  ~AsioSession() override { close(); }

  void start() {
    try {
      tcp::resolver resolver(ioc_);
      asio::connect(lowest(*stream_), resolver.resolve(ep_.host, std::to_string(ep_.port)));
      if constexpr (std::is_same_v<Stream, Tls>) {
        if (!SSL_set_tlsext_host_name(stream_->native_handle(), ep_.host.c_str())) {
          throw BrokerError("cannot set TLS server name");
        }
        stream_->set_verify_callback(asio::ssl::host_name_verification(ep_.host));
        stream_->handshake(asio::ssl::stream_base::client);
      }
      mqtt::ConnectOptions opts{client_id_, ep_.username, ep_.password, ep_.keepalive_s, true};
      asio::write(*stream_, asio::buffer(mqtt::encode_connect(opts)));
      std::optional<mqtt::RawPacket> connack;
      while (!connack) {
        const std::size_t n = stream_->read_some(asio::buffer(read_buf_));
        decoder_.feed(read_buf_.data(), n);
        connack = decoder_.next();
      }
      const std::uint8_t code = mqtt::parse_connack(*connack);
      if (code != 0) {
        throw ConnectionRefused("broker refused '" + client_id_ + "': " + mqtt::connack_reason(code));
      }
    } catch (const boost::system::system_error& e) {
      throw BrokerError("cannot reach broker " + ep_.host + ":" + std::to_string(ep_.port) + ": " +
                        e.what());
    }
    read_loop();
    schedule_ping();
    io_thread_ = std::thread([this] { ioc_.run(); });
  }

  const std::string& client_id() const override { return client_id_; }

  void publish(const std::string& topic, const std::string& payload, bool retain) override {
    mqtt::Publish p{topic, payload, 1, retain, false, next_id()};
    await_ack(p.packet_id, [&](bool dup) {
      p.dup = dup;
      return mqtt::encode_publish(p);
    }, "publish to " + topic);
  }

  bool subscribe(const std::string& filter) override {
    const std::uint16_t id = next_id();
    {
      std::lock_guard lock(mu_);
      filters_.push_back(filter);
    }
    const std::uint8_t granted =
        await_ack(id, [&](bool) { return mqtt::encode_subscribe(id, filter, 1); }, "subscribe " + filter);
    if (granted == 0x80) {
      std::lock_guard lock(mu_);
      filters_.erase(std::find(filters_.begin(), filters_.end(), filter));
      return false;
    }
    return true;
  }

  std::optional<Message> receive(std::chrono::steady_clock::time_point deadline) override {
    return deliveries_.pop_until(deadline);
  }

  void close() override {
    if (closing_.exchange(true)) return;
    if (io_thread_.joinable()) {
      asio::post(ioc_, [this] {
        send(mqtt::encode_disconnect());
        shutdown_after_writes_ = true;
        if (!writing_) shutdown();
      });
      // Let the DISCONNECT drain, then stop regardless.
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, std::chrono::seconds(2), [&] { return broken_; });
      lock.unlock();
      deliveries_.close();  // unblocks a reader stuck on a full queue
      ioc_.stop();
      io_thread_.join();
    }
    fail_all();
    deliveries_.close();
  }

 private:
  std::unique_ptr<Stream> make_stream() {
    if constexpr (std::is_same_v<Stream, Tls>) {
      return std::make_unique<Tls>(ioc_, *ssl_);
    } else {
      return std::make_unique<Plain>(ioc_);
    }
  }

  std::uint16_t next_id() {
    std::uint16_t id = ++packet_id_;
    if (id == 0) id = ++packet_id_;
    return id;
  }

  template <typename Encode>
  std::uint8_t await_ack(std::uint16_t id, Encode encode, const std::string& what) {
    {
      std::lock_guard lock(mu_);
      if (broken_) throw BrokerError("connection lost before " + what);
      acks_[id] = std::nullopt;
    }
    for (int attempt = 0; attempt <= ep_.max_retries; ++attempt) {
      auto bytes = std::make_shared<mqtt::Bytes>(encode(attempt > 0));
      asio::post(ioc_, [this, bytes] { send(std::move(*bytes)); });
      std::unique_lock lock(mu_);
      const bool done = cv_.wait_for(lock, ep_.ack_timeout, [&] { return broken_ || acks_[id].has_value(); });
      if (done && acks_[id]) {
        const std::uint8_t code = *acks_[id];
        acks_.erase(id);
        return code;
      }
      if (broken_) break;
    }
    std::lock_guard lock(mu_);
    acks_.erase(id);
    throw BrokerError("no acknowledgement for " + what);
  }

  // io thread only
  void send(mqtt::Bytes bytes) {
    if (io_failed_) return;
    outbox_.push_back(std::move(bytes));
    if (!writing_) write_next();
  }

  void write_next() {
    if (outbox_.empty()) {
      writing_ = false;
      if (shutdown_after_writes_) shutdown();
      return;
    }
    writing_ = true;
    asio::async_write(*stream_, asio::buffer(outbox_.front()),
                      [this](boost::system::error_code ec, std::size_t) {
                        outbox_.pop_front();
                        if (ec) return on_error(ec);
                        write_next();
                      });
  }

  void read_loop() {
    stream_->async_read_some(asio::buffer(read_buf_), [this](boost::system::error_code ec, std::size_t n) {
      if (ec) return on_error(ec);
      decoder_.feed(read_buf_.data(), n);
      try {
        while (auto p = decoder_.next()) dispatch(*p);
      } catch (const mqtt::PacketError& e) {
        spdlog::error("mqtt '{}': {}", client_id_, e.what());
        return on_error(asio::error::invalid_argument);
      }
      read_loop();
    });
  }

  void dispatch(const mqtt::RawPacket& p) {
    switch (p.type) {
      case mqtt::PacketType::publish: {
        const auto pub = mqtt::parse_publish(p);
        if (pub.qos == 1) send(mqtt::encode_puback(pub.packet_id));
        if (!subscribed_to(pub.topic)) {
          // Some brokers replay retained messages outside the filter.
          spdlog::debug("mqtt '{}': dropping unsolicited message on '{}'", client_id_, pub.topic);
          break;
        }
        // A full queue blocks the io thread, which back-pressures the broker.
        deliveries_.push(Message{pub.topic, pub.payload, pub.retain});
        break;
      }
      case mqtt::PacketType::puback:
        resolve(mqtt::parse_packet_id(p), 0);
        break;
      case mqtt::PacketType::suback: {
        const auto [id, code] = mqtt::parse_suback(p);
        resolve(id, code);
        break;
      }
      case mqtt::PacketType::pingresp:
        break;
      default:
        spdlog::warn("mqtt '{}': unexpected packet type {}", client_id_, static_cast<int>(p.type));
    }
  }

  bool subscribed_to(const std::string& topic) {
    std::lock_guard lock(mu_);
    return std::any_of(filters_.begin(), filters_.end(),
                       [&](const std::string& f) { return topic_matches(f, topic); });
  }

  void resolve(std::uint16_t id, std::uint8_t code) {
    std::lock_guard lock(mu_);
    auto it = acks_.find(id);
    if (it != acks_.end()) it->second = code;
    cv_.notify_all();
  }

  void schedule_ping() {
    keepalive_.expires_after(std::chrono::seconds(std::max<int>(1, ep_.keepalive_s / 2)));
    keepalive_.async_wait([this](boost::system::error_code ec) {
      if (ec || io_failed_) return;
      send(mqtt::encode_pingreq());
      schedule_ping();
    });
  }

  void on_error(boost::system::error_code ec) {
    if (!closing_ && ec != asio::error::operation_aborted) {
      spdlog::error("mqtt '{}': connection lost: {}", client_id_, ec.message());
    }
    shutdown();
  }

  void shutdown() {
    if (io_failed_) return;
    io_failed_ = true;
    keepalive_.cancel();
    boost::system::error_code ignored;
    lowest(*stream_).shutdown(tcp::socket::shutdown_both, ignored);
    lowest(*stream_).close(ignored);
    fail_all();
    deliveries_.close();
  }

  void fail_all() {
    std::lock_guard lock(mu_);
    broken_ = true;
    cv_.notify_all();
  }

  MqttEndpoint ep_;
  std::string client_id_;
  std::unique_ptr<asio::ssl::context> ssl_;
  asio::io_context ioc_;
  std::unique_ptr<Stream> stream_;
  asio::steady_timer keepalive_;
  std::thread io_thread_;

  std::array<std::uint8_t, 64 * 1024> read_buf_{};
  mqtt::Decoder decoder_;
  std::deque<mqtt::Bytes> outbox_;  // io thread
  bool writing_ = false;            // io thread
  bool io_failed_ = false;          // io thread
  bool shutdown_after_writes_ = false;

  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::uint16_t, std::optional<std::uint8_t>> acks_;
  std::vector<std::string> filters_;
  bool broken_ = false;

  std::atomic<std::uint16_t> packet_id_{0};
  std::atomic<bool> closing_{false};
  util::BlockingQueue<Message> deliveries_;
};

}  // namespace

MqttBroker::MqttBroker(MqttEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::unique_ptr<Session> MqttBroker::connect(const std::string& client_id) {
  if (endpoint_.tls) {
    auto ctx = std::make_unique<asio::ssl::context>(asio::ssl::context::tls_client);
    if (endpoint_.ca_file) {
      ctx->load_verify_file(*endpoint_.ca_file);
    } else {
      ctx->set_default_verify_paths();
    }
    ctx->set_verify_mode(endpoint_.verify_peer ? asio::ssl::verify_peer : asio::ssl::verify_none);
    auto s = std::make_unique<AsioSession<Tls>>(endpoint_, client_id, std::move(ctx));
    s->start();
    return s;
  }
  auto s = std::make_unique<AsioSession<Plain>>(endpoint_, client_id, nullptr);
  s->start();
  return s;
}

}  // namespace fedplat::proto
