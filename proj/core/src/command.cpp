#include "optsmr/command.hpp"

#include <cstring>
#include <stdexcept>

namespace optsmr {

const char* kind_name(CommandKind k) {
  switch (k) {
    case CommandKind::Read: return "read";
    case CommandKind::Update: return "update";
    case CommandKind::Insert: return "insert";
    case CommandKind::Delete: return "delete";
  }
  return "?";
}

std::optional<CommandKind> kind_from_name(std::string_view s) {
  if (s == "read") return CommandKind::Read;
  if (s == "update") return CommandKind::Update;
  if (s == "insert") return CommandKind::Insert;
  if (s == "delete") return CommandKind::Delete;
  return std::nullopt;
}

const char* engine_mode_name(EngineMode m) {
  switch (m) {
    case EngineMode::SequentialSMR: return "smr";
    case EngineMode::PSMR: return "psmr";
    case EngineMode::OptPSMR: return "opt-psmr";
  }
  return "?";
}

std::optional<EngineMode> engine_mode_from_name(std::string_view s) {
  if (s == "smr") return EngineMode::SequentialSMR;
  if (s == "psmr") return EngineMode::PSMR;
  if (s == "opt-psmr" || s == "optpsmr") return EngineMode::OptPSMR;
  return std::nullopt;
}

std::string hex_encode(std::string_view raw) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(raw.size() * 2);
  for (unsigned char c : raw) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

static int hex_val(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw std::invalid_argument("bad hex digit");
}

std::string hex_decode(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd hex length");
  std::string out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2)
    out.push_back(char(hex_val(hex[i]) << 4 | hex_val(hex[i + 1])));
  return out;
}

std::string Command::describe() const {
  std::string s = kind_name(kind);
  if (value) {
    s += '=';
    s += hex_encode(*value);
  }
  return s;
}

namespace {

void put_u32(std::vector<uint8_t>& b, uint32_t v) {
  for (unsigned i = 0; i < 4; ++i) b.push_back(uint8_t(v >> (i * 8)));
}
void put_u64(std::vector<uint8_t>& b, uint64_t v) {
  for (unsigned i = 0; i < 8; ++i) b.push_back(uint8_t(v >> (i * 8)));
}

struct Reader {
  const uint8_t* p;
  const uint8_t* end;
  uint8_t u8() {
    if (p >= end) throw std::invalid_argument("truncated command");
    return *p++;
  }
  uint32_t u32() {
    uint32_t v = 0;
    for (unsigned i = 0; i < 4; ++i) v |= uint32_t(u8()) << (i * 8);
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (unsigned i = 0; i < 8; ++i) v |= uint64_t(u8()) << (i * 8);
    return v;
  }
};

}  // namespace

std::vector<uint8_t> encode_command(const Command& c) {
  std::vector<uint8_t> b;
  b.reserve(32 + (c.value ? c.value->size() : 0));
  put_u32(b, c.id.client_id);
  put_u64(b, c.id.client_seq);
  b.push_back(uint8_t(c.kind));
  b.push_back(uint8_t(c.mode));
  put_u64(b, c.key);
  b.push_back(c.value ? 1 : 0);
  if (c.value) {
    put_u32(b, uint32_t(c.value->size()));
    b.insert(b.end(), c.value->begin(), c.value->end());
  }
  return b;
}

Command decode_command(const uint8_t* data, size_t len) {
  Reader r{data, data + len};
  Command c;
  c.id.client_id = r.u32();
  c.id.client_seq = r.u64();
  uint8_t kind = r.u8();
  if (kind > uint8_t(CommandKind::Delete)) throw std::invalid_argument("bad command kind");
  c.kind = CommandKind(kind);
  uint8_t mode = r.u8();
  if (mode > uint8_t(Mode::Conservative)) throw std::invalid_argument("bad command mode");
  c.mode = Mode(mode);
  c.key = r.u64();
  if (r.u8()) {
    uint32_t n = r.u32();
    if (size_t(r.end - r.p) < n) throw std::invalid_argument("truncated command value");
    c.value = std::string(reinterpret_cast<const char*>(r.p), n);
    r.p += n;
  }
  return c;
}

std::string outcome_ok() { return "ok"; }
std::string outcome_notfound() { return "notfound"; }
std::string outcome_absent() { return "absent"; }
std::string outcome_value(std::string_view v) { return "val=" + hex_encode(v); }

}  // namespace optsmr
