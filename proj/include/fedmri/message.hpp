#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedmri::fed {

enum class Direction { server_to_client, client_to_server };
// Model payloads are the (partial) weights themselves; negatives are the
// previous-round client encoders broadcast for the contrastive term.
enum class PayloadClass { model, negatives };

std::string to_string(Direction d);
std::string to_string(PayloadClass c);

struct Segment {
  std::string name;
  std::size_t count = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// One transfer between server and a client. Wire form is the manifest JSON
/// (compact, newline-terminated) followed by the payload as little-endian
/// float32 in name order, so byte_count = manifest bytes + 4 · elements.
struct RoundMessage {
  Direction direction = Direction::server_to_client;
  PayloadClass payload_class = PayloadClass::model;
  std::size_t round = 0;
  std::string client_id;
  std::vector<Segment> segments;  // layout of one vector
  std::size_t vectors = 1;
  std::vector<float> payload;     // vectors × Σ segment counts

  std::string manifest() const;
  std::size_t manifest_bytes() const { return manifest().size(); }
  std::size_t payload_bytes() const { return 4 * payload.size(); }
  std::size_t byte_count() const { return manifest_bytes() + payload_bytes(); }

  std::vector<std::uint8_t> encode() const;
  // Throws FormatError on a malformed buffer.
  static RoundMessage decode(std::span<const std::uint8_t> bytes);

  std::span<const float> vector(std::size_t i) const;

  friend bool operator==(const RoundMessage&, const RoundMessage&) = default;
};

/// Accounting summary of a message, kept after the payload is consumed.
struct MessageRecord {
  Direction direction = Direction::server_to_client;
  PayloadClass payload_class = PayloadClass::model;
  std::size_t round = 0;
  std::string client_id;
  std::uint64_t payload_bytes = 0;
  std::uint64_t manifest_bytes = 0;

  std::uint64_t byte_count() const { return payload_bytes + manifest_bytes; }
};

MessageRecord make_record(const RoundMessage& m);

}  // namespace fedmri::fed
