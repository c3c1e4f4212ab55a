#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <span>
#include <vector>

#include "dpl/types.hpp"
#include "dpl/worker.hpp"

namespace dpl {

/// Bits used per label on the wire: ceil(log2 K), zero for K = 1.
std::size_t label_width(std::size_t num_labels);

/// Serialized message. bit_length counts payload bits only; bytes is the
/// payload padded to a whole number of bytes.
struct Packet {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_length = 0;
};

class BitWriter {
public:
  void write(std::uint64_t value, std::size_t bits);
  void write_double(double value);
  [[nodiscard]] Packet finish() &&;

private:
  Packet packet_;
};

class BitReader {
public:
  explicit BitReader(const Packet &packet) : packet_(&packet) {}
  std::uint64_t read(std::size_t bits);
  double read_double();
  [[nodiscard]] bool exhausted() const noexcept { return pos_ == packet_->bit_length; }

private:
  const Packet *packet_;
  std::size_t pos_ = 0;
};

/// Protocol constants both sides agree on before the first round.
struct WireContext {
  std::size_t num_labels = 0;
  std::size_t num_nodes = 0;
  std::size_t block_size = 0;
};

// Label vectors: packed at label_width(K) bits each.
Packet encode_labels(std::span<const Label> labels, const WireContext &ctx);
LabelVector decode_labels(const Packet &p, std::size_t count, const WireContext &ctx);

// (O_r, n_r): K*K + K signed 64-bit counts.
Packet encode_summary(const WorkerSummary &s, const WireContext &ctx);
WorkerSummary decode_summary(const Packet &p, const WireContext &ctx);

// (pi, Lambda or Psi): K + K*K doubles. The model kind is fixed by configuration.
Packet encode_params(const ModelParams &params, const WireContext &ctx);
ModelParams decode_params(const Packet &p, ModelKind kind, const WireContext &ctx);

/// Updated local labels plus the worker's final EM objective.
struct LocalLabelsMessage {
  LabelVector labels;
  double objective = 0.0;
};
Packet encode_local_labels(const LocalLabelsMessage &m, const WireContext &ctx);
LocalLabelsMessage decode_local_labels(const Packet &p, const WireContext &ctx);

/// Payload sizes in bits, as produced by the codec.
std::size_t label_broadcast_bits(const WireContext &ctx);
std::size_t summary_bits(const WireContext &ctx);
std::size_t params_bits(const WireContext &ctx);
std::size_t local_labels_bits(const WireContext &ctx);

enum class MessageKind : std::uint8_t { labels, summary, params, local_labels, shutdown, error };

/// Envelope metadata (kind, sender) is framing and not counted as payload.
struct Envelope {
  MessageKind kind = MessageKind::shutdown;
  std::size_t sender = 0;
  Packet packet;
};

/// Endpoint 0 is the master; worker r is endpoint r + 1.
class Transport {
public:
  virtual ~Transport() = default;
  virtual void send(std::size_t to, Envelope message) = 0;
  virtual Envelope receive(std::size_t at) = 0;
};

/// Mailbox-per-endpoint transport that also meters traffic by direction.
class InProcessTransport final : public Transport {
public:
  explicit InProcessTransport(std::size_t num_workers);

  void send(std::size_t to, Envelope message) override;
  Envelope receive(std::size_t at) override;

  /// Bits sent master -> workers / workers -> master since the last reset.
  [[nodiscard]] std::uint64_t downstream_bits() const;
  [[nodiscard]] std::uint64_t upstream_bits() const;
  [[nodiscard]] std::uint64_t messages_sent() const;
  void reset_counters();

private:
  struct Mailbox {
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<Envelope> queue;
  };
  std::vector<Mailbox> boxes_;
  mutable std::mutex meter_mutex_;
  std::uint64_t down_bits_ = 0;
  std::uint64_t up_bits_ = 0;
  std::uint64_t messages_ = 0;
};

} // namespace dpl
