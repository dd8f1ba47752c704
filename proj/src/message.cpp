#include "fedmri/message.hpp"

#include <bit>
#include <json.hpp>
#include <numeric>

#include "fedmri/errors.hpp"

namespace fedmri::fed {

using nlohmann::json;

std::string to_string(Direction d) { return d == Direction::server_to_client ? "server_to_client" : "client_to_server"; }
std::string to_string(PayloadClass c) { return c == PayloadClass::model ? "model" : "negatives"; }

namespace {

std::size_t vector_length(const std::vector<Segment>& segments) {
  return std::accumulate(segments.begin(), segments.end(), std::size_t{0},
                         [](std::size_t n, const Segment& s) { return n + s.count; });
}

}  // namespace

std::string RoundMessage::manifest() const {
  json segs = json::array();
  for (const auto& s : segments) segs.push_back(json::array({s.name, s.count}));
  json m{{"direction", to_string(direction)},
         {"class", to_string(payload_class)},
         {"round", round},
         {"client", client_id},
         {"vectors", vectors},
         {"segments", segs}};
  return m.dump() + "\n";
}

std::span<const float> RoundMessage::vector(std::size_t i) const {
  const std::size_t n = vector_length(segments);
  return std::span<const float>(payload).subspan(i * n, n);
}

std::vector<std::uint8_t> RoundMessage::encode() const {
  if (payload.size() != vectors * vector_length(segments))
    throw DimensionError("RoundMessage payload length does not match its manifest");
  const std::string head = manifest();
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.reserve(head.size() + 4 * payload.size());
  for (float f : payload) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((bits >> s) & 0xff));
  }
  return out;
}

RoundMessage RoundMessage::decode(std::span<const std::uint8_t> bytes) {
  std::size_t newline = 0;
  while (newline < bytes.size() && bytes[newline] != '\n') ++newline;
  if (newline == bytes.size()) throw FormatError("message manifest is not newline-terminated", bytes.size());

  json m;
  try {
    m = json::parse(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(newline));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("bad message manifest: ") + e.what(), e.byte);
  }

  RoundMessage msg;
  try {
    const auto dir = m.at("direction").get<std::string>();
    if (dir != "server_to_client" && dir != "client_to_server") throw FormatError("bad direction", 0);
    msg.direction = dir == "server_to_client" ? Direction::server_to_client : Direction::client_to_server;
    const auto cls = m.at("class").get<std::string>();
    if (cls != "model" && cls != "negatives") throw FormatError("bad payload class", 0);
    msg.payload_class = cls == "model" ? PayloadClass::model : PayloadClass::negatives;
    msg.round = m.at("round").get<std::size_t>();
    msg.client_id = m.at("client").get<std::string>();
    msg.vectors = m.at("vectors").get<std::size_t>();
    for (const auto& s : m.at("segments")) msg.segments.push_back({s.at(0).get<std::string>(), s.at(1).get<std::size_t>()});
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad message manifest: ") + e.what(), 0);
  }

  const std::size_t start = newline + 1;
  const std::size_t floats = msg.vectors * vector_length(msg.segments);
  if (bytes.size() != start + 4 * floats)
    throw FormatError("payload length disagrees with manifest", std::min(bytes.size(), start + 4 * floats));
  msg.payload.resize(floats);
  for (std::size_t i = 0; i < floats; ++i) {
    const std::size_t at = start + 4 * i;
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[at]) | static_cast<std::uint32_t>(bytes[at + 1]) << 8 |
                               static_cast<std::uint32_t>(bytes[at + 2]) << 16 |
                               static_cast<std::uint32_t>(bytes[at + 3]) << 24;
    msg.payload[i] = std::bit_cast<float>(bits);
  }
  return msg;
}

MessageRecord make_record(const RoundMessage& m) {
  return {m.direction, m.payload_class, m.round, m.client_id, m.payload_bytes(), m.manifest_bytes()};
}

}  // namespace fedmri::fed
