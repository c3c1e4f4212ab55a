#include "dpl/protocol.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

namespace dpl {

std::size_t label_width(std::size_t num_labels) {
  if (num_labels <= 1) {
    return 0;
  }
  return static_cast<std::size_t>(std::bit_width(num_labels - 1));
}

void BitWriter::write(std::uint64_t value, std::size_t bits) {
  for (std::size_t b = 0; b < bits; ++b) {
    const std::size_t pos = packet_.bit_length + b;
    if (pos / 8 >= packet_.bytes.size()) {
      packet_.bytes.push_back(0);
    }
    if ((value >> b) & 1U) {
      packet_.bytes[pos / 8] |= static_cast<std::uint8_t>(1U << (pos % 8));
    }
  }
  packet_.bit_length += bits;
}

void BitWriter::write_double(double value) {
  write(std::bit_cast<std::uint64_t>(value), 64);
}

Packet BitWriter::finish() && { return std::move(packet_); }

std::uint64_t BitReader::read(std::size_t bits) {
  if (pos_ + bits > packet_->bit_length) {
    throw std::out_of_range("read past end of packet");
  }
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < bits; ++b) {
    const std::size_t pos = pos_ + b;
    if ((packet_->bytes[pos / 8] >> (pos % 8)) & 1U) {
      v |= std::uint64_t{1} << b;
    }
  }
  pos_ += bits;
  return v;
}

double BitReader::read_double() { return std::bit_cast<double>(read(64)); }

namespace {

void expect_consumed(const BitReader &r) {
  if (!r.exhausted()) {
    throw std::runtime_error("trailing bits in packet");
  }
}

} // namespace

Packet encode_labels(std::span<const Label> labels, const WireContext &ctx) {
  const std::size_t w = label_width(ctx.num_labels);
  BitWriter out;
  for (Label l : labels) {
    if (l >= ctx.num_labels) {
      throw std::invalid_argument("label out of range for wire encoding");
    }
    out.write(l, w);
  }
  return std::move(out).finish();
}

LabelVector decode_labels(const Packet &p, std::size_t count, const WireContext &ctx) {
  const std::size_t w = label_width(ctx.num_labels);
  BitReader in(p);
  LabelVector out(count);
  for (auto &l : out) {
    l = static_cast<Label>(in.read(w));
  }
  expect_consumed(in);
  return out;
}

Packet encode_summary(const WorkerSummary &s, const WireContext &ctx) {
  const auto k = static_cast<Eigen::Index>(ctx.num_labels);
  BitWriter out;
  for (Eigen::Index l = 0; l < k; ++l) {
    for (Eigen::Index m = 0; m < k; ++m) {
      out.write(static_cast<std::uint64_t>(s.block_edges(l, m)), 64);
    }
  }
  for (Eigen::Index l = 0; l < k; ++l) {
    out.write(static_cast<std::uint64_t>(s.block_sizes(l)), 64);
  }
  return std::move(out).finish();
}

WorkerSummary decode_summary(const Packet &p, const WireContext &ctx) {
  const auto k = static_cast<Eigen::Index>(ctx.num_labels);
  BitReader in(p);
  WorkerSummary s;
  s.block_edges.resize(k, k);
  s.block_sizes.resize(k);
  for (Eigen::Index l = 0; l < k; ++l) {
    for (Eigen::Index m = 0; m < k; ++m) {
      s.block_edges(l, m) = static_cast<std::int64_t>(in.read(64));
    }
  }
  for (Eigen::Index l = 0; l < k; ++l) {
    s.block_sizes(l) = static_cast<std::int64_t>(in.read(64));
  }
  expect_consumed(in);
  return s;
}

Packet encode_params(const ModelParams &params, const WireContext &ctx) {
  const auto k = static_cast<Eigen::Index>(ctx.num_labels);
  BitWriter out;
  for (Eigen::Index l = 0; l < k; ++l) {
    out.write_double(params.pi(l));
  }
  for (Eigen::Index l = 0; l < k; ++l) {
    for (Eigen::Index m = 0; m < k; ++m) {
      out.write_double(params.rates(l, m));
    }
  }
  return std::move(out).finish();
}

ModelParams decode_params(const Packet &p, ModelKind kind, const WireContext &ctx) {
  const auto k = static_cast<Eigen::Index>(ctx.num_labels);
  BitReader in(p);
  ModelParams params;
  params.kind = kind;
  params.pi.resize(k);
  params.rates.resize(k, k);
  for (Eigen::Index l = 0; l < k; ++l) {
    params.pi(l) = in.read_double();
  }
  for (Eigen::Index l = 0; l < k; ++l) {
    for (Eigen::Index m = 0; m < k; ++m) {
      params.rates(l, m) = in.read_double();
    }
  }
  expect_consumed(in);
  return params;
}

Packet encode_local_labels(const LocalLabelsMessage &m, const WireContext &ctx) {
  const std::size_t w = label_width(ctx.num_labels);
  BitWriter out;
  for (Label l : m.labels) {
    out.write(l, w);
  }
  out.write_double(m.objective);
  return std::move(out).finish();
}

LocalLabelsMessage decode_local_labels(const Packet &p, const WireContext &ctx) {
  const std::size_t w = label_width(ctx.num_labels);
  BitReader in(p);
  LocalLabelsMessage m;
  m.labels.resize(ctx.block_size);
  for (auto &l : m.labels) {
    l = static_cast<Label>(in.read(w));
  }
  m.objective = in.read_double();
  expect_consumed(in);
  return m;
}

std::size_t label_broadcast_bits(const WireContext &ctx) { return ctx.num_nodes * label_width(ctx.num_labels); }
std::size_t summary_bits(const WireContext &ctx) { return 64 * (ctx.num_labels * ctx.num_labels + ctx.num_labels); }
std::size_t params_bits(const WireContext &ctx) { return 64 * (ctx.num_labels + ctx.num_labels * ctx.num_labels); }
std::size_t local_labels_bits(const WireContext &ctx) {
  return ctx.block_size * label_width(ctx.num_labels) + 64;
}

InProcessTransport::InProcessTransport(std::size_t num_workers) : boxes_(num_workers + 1) {}

void InProcessTransport::send(std::size_t to, Envelope message) {
  if (to >= boxes_.size()) {
    throw std::out_of_range("unknown endpoint");
  }
  {
    std::lock_guard lock(meter_mutex_);
    if (to == 0) {
      up_bits_ += message.packet.bit_length;
    } else {
      down_bits_ += message.packet.bit_length;
    }
    ++messages_;
  }
  auto &box = boxes_[to];
  {
    std::lock_guard lock(box.mutex);
    box.queue.push_back(std::move(message));
  }
  box.ready.notify_one();
}

Envelope InProcessTransport::receive(std::size_t at) {
  auto &box = boxes_.at(at);
  std::unique_lock lock(box.mutex);
  box.ready.wait(lock, [&] { return !box.queue.empty(); });
  Envelope e = std::move(box.queue.front());
  box.queue.pop_front();
  return e;
}

std::uint64_t InProcessTransport::downstream_bits() const {
  std::lock_guard lock(meter_mutex_);
  return down_bits_;
}

std::uint64_t InProcessTransport::upstream_bits() const {
  std::lock_guard lock(meter_mutex_);
  return up_bits_;
}

std::uint64_t InProcessTransport::messages_sent() const {
  std::lock_guard lock(meter_mutex_);
  return messages_;
}

void InProcessTransport::reset_counters() {
  std::lock_guard lock(meter_mutex_);
  down_bits_ = 0;
  up_bits_ = 0;
  messages_ = 0;
}

} // namespace dpl
