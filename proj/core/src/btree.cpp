#include "optsmr/btree.hpp"

#include <algorithm>
#include <cassert>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "optsmr/fnv.hpp"

namespace optsmr {

const char* fail_reason_name(FailReason r) {
  switch (r) {
    case FailReason::StructuralChange: return "structural-change";
    case FailReason::LeftBoundaryOverlap: return "left-boundary-overlap";
    case FailReason::RightBoundaryOverlap: return "right-boundary-overlap";
  }
  return "?";
}

std::string SafetyVerdict::str() const {
  return passed() ? "pass" : std::string("fail:") + fail_reason_name(*reason_);
}

struct BPlusTree::Node {
  uint64_t id = 0;
  bool leaf = true;
  std::vector<uint64_t> keys;  // leaf keys, or inner separators
  std::vector<std::string> values;
  std::vector<std::unique_ptr<Node>> children;

  size_t entry_count() const { return leaf ? keys.size() : children.size(); }

  // Route key == separator to the right child.
  size_t route(uint64_t key) const {
    return size_t(std::upper_bound(keys.begin(), keys.end(), key) - keys.begin());
  }
};

struct BPlusTree::SplitResult {
  uint64_t separator;
  std::unique_ptr<Node> right;
};

BPlusTree::BPlusTree(BTreeConfig cfg) : cfg_(cfg) {
  if (cfg_.fanout < 3) throw std::invalid_argument("fanout must be >= 3");
  if (cfg_.max_key < 1) throw std::invalid_argument("max key must be >= 1");
  root_ = make_leaf();
}

BPlusTree::~BPlusTree() = default;

namespace {
std::unique_ptr<BPlusTree::Node> clone_node(const BPlusTree::Node& n) {
  auto c = std::make_unique<BPlusTree::Node>();
  c->id = n.id;
  c->leaf = n.leaf;
  c->keys = n.keys;
  c->values = n.values;
  c->children.reserve(n.children.size());
  for (const auto& ch : n.children) c->children.push_back(clone_node(*ch));
  return c;
}
}  // namespace

BPlusTree::BPlusTree(const BPlusTree& other)
    : cfg_(other.cfg_),
      root_(clone_node(*other.root_)),
      size_(other.size()),
      height_(other.height_),
      next_node_id_(other.next_node_id_) {}

BPlusTree::BPlusTree(BPlusTree&& other) noexcept
    : cfg_(other.cfg_),
      root_(std::move(other.root_)),
      size_(other.size()),
      height_(other.height_),
      next_node_id_(other.next_node_id_),
      instrument_(other.instrument_),
      last_op_(std::move(other.last_op_)) {}

BPlusTree& BPlusTree::operator=(BPlusTree&& other) noexcept {
  cfg_ = other.cfg_;
  root_ = std::move(other.root_);
  size_.store(other.size());
  height_ = other.height_;
  next_node_id_ = other.next_node_id_;
  instrument_ = other.instrument_;
  last_op_ = std::move(other.last_op_);
  return *this;
}

std::unique_ptr<BPlusTree::Node> BPlusTree::make_leaf() {
  auto n = std::make_unique<Node>();
  n->id = next_node_id_++;
  n->leaf = true;
  return n;
}

std::unique_ptr<BPlusTree::Node> BPlusTree::make_inner() {
  auto n = std::make_unique<Node>();
  n->id = next_node_id_++;
  n->leaf = false;
  return n;
}

void BPlusTree::touch(const Node* n) {
  if (instrument_) last_op_.mutated_nodes.push_back(n->id);
}

std::optional<std::string> BPlusTree::read(uint64_t key) const {
  const Node* n = root_.get();
  while (!n->leaf) n = n->children[n->route(key)].get();
  auto it = std::lower_bound(n->keys.begin(), n->keys.end(), key);
  if (it == n->keys.end() || *it != key) return std::nullopt;
  return n->values[size_t(it - n->keys.begin())];
}

bool BPlusTree::update(uint64_t key, std::string value) {
  if (instrument_) last_op_ = OpStats{};
  Node* n = root_.get();
  while (!n->leaf) n = n->children[n->route(key)].get();
  auto it = std::lower_bound(n->keys.begin(), n->keys.end(), key);
  if (it == n->keys.end() || *it != key) return false;
  n->values[size_t(it - n->keys.begin())] = std::move(value);
  touch(n);
  return true;
}

std::optional<BPlusTree::SplitResult> BPlusTree::insert_rec(Node& n, uint64_t key,
                                                            std::string&& value) {
  if (n.leaf) {
    auto it = std::lower_bound(n.keys.begin(), n.keys.end(), key);
    size_t pos = size_t(it - n.keys.begin());
    if (it != n.keys.end() && *it == key) {
      n.values[pos] = std::move(value);  // overwrite, structure-neutral
      touch(&n);
      return std::nullopt;
    }
    n.keys.insert(it, key);
    n.values.insert(n.values.begin() + long(pos), std::move(value));
    size_.fetch_add(1, std::memory_order_relaxed);
    touch(&n);
    if (n.keys.size() <= leaf_cap()) return std::nullopt;

    auto right = make_leaf();
    size_t mid = n.keys.size() / 2;
    right->keys.assign(n.keys.begin() + long(mid), n.keys.end());
    right->values.assign(std::make_move_iterator(n.values.begin() + long(mid)),
                         std::make_move_iterator(n.values.end()));
    n.keys.resize(mid);
    n.values.resize(mid);
    if (instrument_) ++last_op_.splits;
    touch(right.get());
    return SplitResult{right->keys.front(), std::move(right)};
  }

  size_t idx = n.route(key);
  auto split = insert_rec(*n.children[idx], key, std::move(value));
  if (!split) return std::nullopt;

  n.keys.insert(n.keys.begin() + long(idx), split->separator);
  n.children.insert(n.children.begin() + long(idx) + 1, std::move(split->right));
  touch(&n);
  if (n.children.size() <= inner_cap()) return std::nullopt;

  // Promote the middle separator.
  size_t mid = n.keys.size() / 2;
  uint64_t promoted = n.keys[mid];
  auto right = make_inner();
  right->keys.assign(n.keys.begin() + long(mid) + 1, n.keys.end());
  right->children.assign(std::make_move_iterator(n.children.begin() + long(mid) + 1),
                         std::make_move_iterator(n.children.end()));
  n.keys.resize(mid);
  n.children.resize(mid + 1);
  if (instrument_) ++last_op_.splits;
  touch(right.get());
  return SplitResult{promoted, std::move(right)};
}

void BPlusTree::insert(uint64_t key, std::string value) {
  if (key > cfg_.max_key) throw std::out_of_range("key exceeds key space");
  if (instrument_) last_op_ = OpStats{};
  auto split = insert_rec(*root_, key, std::move(value));
  if (split) {
    auto new_root = make_inner();
    new_root->keys.push_back(split->separator);
    new_root->children.push_back(std::move(root_));
    new_root->children.push_back(std::move(split->right));
    root_ = std::move(new_root);
    ++height_;
    touch(root_.get());
  }
}

void BPlusTree::fix_child_underflow(Node& parent, size_t idx) {
  Node* child = parent.children[idx].get();
  Node* left = idx > 0 ? parent.children[idx - 1].get() : nullptr;
  Node* right = idx + 1 < parent.children.size() ? parent.children[idx + 1].get() : nullptr;
  size_t cap = child->leaf ? leaf_cap() : inner_cap();

  auto merge_into = [&](Node& dst, Node& src, size_t sep_idx) {
    // src sits immediately right of dst; sep_idx separates them in parent.
    if (dst.leaf) {
      dst.keys.insert(dst.keys.end(), src.keys.begin(), src.keys.end());
      dst.values.insert(dst.values.end(), std::make_move_iterator(src.values.begin()),
                        std::make_move_iterator(src.values.end()));
    } else {
      dst.keys.push_back(parent.keys[sep_idx]);
      dst.keys.insert(dst.keys.end(), src.keys.begin(), src.keys.end());
      for (auto& ch : src.children) dst.children.push_back(std::move(ch));
    }
    parent.keys.erase(parent.keys.begin() + long(sep_idx));
    parent.children.erase(parent.children.begin() + long(sep_idx) + 1);
    if (instrument_) ++last_op_.merges;
    touch(&dst);
    touch(&parent);
  };

  // Merge when a sibling fits, left first; otherwise redistribute from the
  // fuller sibling (the left one on a tie).
  if (left && left->entry_count() + child->entry_count() <= cap) {
    merge_into(*left, *child, idx - 1);
    return;
  }
  if (right && child->entry_count() + right->entry_count() <= cap) {
    merge_into(*child, *right, idx);
    return;
  }

  bool from_left = left && (!right || left->entry_count() >= right->entry_count());
  Node* sib = from_left ? left : right;
  assert(sib != nullptr);
  if (child->leaf) {
    if (from_left) {
      child->keys.insert(child->keys.begin(), sib->keys.back());
      child->values.insert(child->values.begin(), std::move(sib->values.back()));
      sib->keys.pop_back();
      sib->values.pop_back();
      parent.keys[idx - 1] = child->keys.front();
    } else {
      child->keys.push_back(sib->keys.front());
      child->values.push_back(std::move(sib->values.front()));
      sib->keys.erase(sib->keys.begin());
      sib->values.erase(sib->values.begin());
      parent.keys[idx] = sib->keys.front();
    }
  } else {
    if (from_left) {
      child->keys.insert(child->keys.begin(), parent.keys[idx - 1]);
      parent.keys[idx - 1] = sib->keys.back();
      sib->keys.pop_back();
      child->children.insert(child->children.begin(), std::move(sib->children.back()));
      sib->children.pop_back();
    } else {
      child->keys.push_back(parent.keys[idx]);
      parent.keys[idx] = sib->keys.front();
      sib->keys.erase(sib->keys.begin());
      child->children.push_back(std::move(sib->children.front()));
      sib->children.erase(sib->children.begin());
    }
  }
  if (instrument_) ++last_op_.redistributions;
  touch(child);
  touch(sib);
  touch(&parent);
}

bool BPlusTree::erase_rec(Node& n, uint64_t key) {
  if (n.leaf) {
    auto it = std::lower_bound(n.keys.begin(), n.keys.end(), key);
    if (it == n.keys.end() || *it != key) return false;
    size_t pos = size_t(it - n.keys.begin());
    n.keys.erase(it);
    n.values.erase(n.values.begin() + long(pos));
    size_.fetch_sub(1, std::memory_order_relaxed);
    touch(&n);
    return true;
  }
  size_t idx = n.route(key);
  Node& child = *n.children[idx];
  if (!erase_rec(child, key)) return false;
  size_t min = child.leaf ? leaf_min() : inner_min();
  if (child.entry_count() < min) fix_child_underflow(n, idx);
  return true;
}

bool BPlusTree::erase(uint64_t key) {
  if (instrument_) last_op_ = OpStats{};
  if (!erase_rec(*root_, key)) return false;
  if (!root_->leaf && root_->children.size() == 1) {
    root_ = std::move(root_->children.front());
    --height_;
    touch(root_.get());
  }
  return true;
}

LeafLocator BPlusTree::locate_leaf(uint64_t key) const {
  const Node* n = root_.get();
  uint64_t lo = 0, hi = cfg_.max_key;
  while (!n->leaf) {
    size_t idx = n->route(key);
    if (idx > 0) lo = n->keys[idx - 1];
    if (idx < n->keys.size()) hi = n->keys[idx] - 1;
    n = n->children[idx].get();
  }
  auto it = std::lower_bound(n->keys.begin(), n->keys.end(), key);
  bool present = it != n->keys.end() && *it == key;
  return LeafLocator{n, n->id, lo, hi, n->keys.size(), present};
}

SafetyVerdict BPlusTree::safety_check(CommandKind kind, uint64_t key,
                                      const PartitionMap& partitions,
                                      unsigned thread) const {
  if (!is_structural_kind(kind))
    throw std::logic_error("safety check is defined for insert and delete only");

  LeafLocator loc = locate_leaf(key);

  // (a) the operation must not split, merge, or redistribute.
  if (kind == CommandKind::Insert) {
    if (!loc.key_present && loc.entries >= leaf_cap())
      return SafetyVerdict::fail(FailReason::StructuralChange);
  } else {
    bool root_leaf = loc.leaf == root_.get();
    if (loc.key_present && !root_leaf && loc.entries <= leaf_min())
      return SafetyVerdict::fail(FailReason::StructuralChange);
  }
  // (b) the left neighbor's partition must end below the leaf's range.
  if (thread > 0 && partitions.hi(thread - 1) >= loc.lo)
    return SafetyVerdict::fail(FailReason::LeftBoundaryOverlap);
  // (c) the right neighbor's partition must start above it.
  if (thread + 1 < partitions.threads() && partitions.lo(thread + 1) <= loc.hi)
    return SafetyVerdict::fail(FailReason::RightBoundaryOverlap);
  return SafetyVerdict::pass();
}

namespace {

uint64_t hash_node(const BPlusTree::Node& n, bool with_values) {
  uint64_t h = kFnvOffset;
  h = fnv1a_byte(h, n.leaf ? 0x1f : 0x11);
  h = fnv1a_u64(h, n.keys.size());
  for (uint64_t k : n.keys) h = fnv1a_u64(h, k);
  if (n.leaf) {
    if (with_values) {
      for (const auto& v : n.values) {
        h = fnv1a_u64(h, v.size());
        h = fnv1a_bytes(h, v);
      }
    }
  } else {
    for (const auto& c : n.children) h = fnv1a_u64(h, hash_node(*c, with_values));
  }
  return h;
}

}  // namespace

uint64_t BPlusTree::digest() const {
  uint64_t h = hash_node(*root_, true);
  h = fnv1a_u64(h, size());
  h = fnv1a_u64(h, height_);
  return h;
}

std::string BPlusTree::digest_hex() const {
  char buf[17];
  snprintf(buf, sizeof buf, "%016llx", (unsigned long long)digest());
  return buf;
}

uint64_t BPlusTree::structure_signature() const {
  uint64_t h = hash_node(*root_, false);
  h = fnv1a_u64(h, size());
  h = fnv1a_u64(h, height_);
  return h;
}

size_t BPlusTree::leaf_count() const {
  std::vector<const Node*> stack{root_.get()};
  size_t count = 0;
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (n->leaf) {
      ++count;
    } else {
      for (const auto& c : n->children) stack.push_back(c.get());
    }
  }
  return count;
}

namespace {

bool value_snapshot_safe(const std::string& v) {
  if (v.empty() || (v.size() >= 2 && v[0] == '0' && v[1] == 'x')) return false;
  for (char c : v) {
    bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
              (c >= 'A' && c <= 'Z') || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

void export_rec(const BPlusTree::Node& n, std::ostream& out) {
  if (n.leaf) {
    for (size_t i = 0; i < n.keys.size(); ++i) {
      out << n.keys[i] << ',';
      if (value_snapshot_safe(n.values[i]))
        out << n.values[i];
      else
        out << "0x" << hex_encode(n.values[i]);
      out << '\n';
    }
  } else {
    for (const auto& c : n.children) export_rec(*c, out);
  }
}

}  // namespace

void BPlusTree::export_snapshot(std::ostream& out) const { export_rec(*root_, out); }

BPlusTree BPlusTree::import_snapshot(std::istream& in, BTreeConfig cfg) {
  BPlusTree t(cfg);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("bad snapshot line: " + line);
    uint64_t key = std::stoull(line.substr(0, comma));
    std::string v = line.substr(comma + 1);
    if (v.rfind("0x", 0) == 0) v = hex_decode(v.substr(2));
    t.insert(key, std::move(v));
  }
  return t;
}

namespace {

struct InvariantCheck {
  const BPlusTree& tree;
  unsigned fanout;
  std::string* why;
  size_t entries = 0;

  bool fail(const std::string& msg) {
    if (why) *why = msg;
    return false;
  }

  // Returns leaf depth, 0 on failure.
  unsigned walk(const BPlusTree::Node& n, bool root, std::optional<uint64_t> lo,
                std::optional<uint64_t> hi, bool* ok) {
    unsigned min = (fanout + 1) / 2;
    if (!std::is_sorted(n.keys.begin(), n.keys.end()) ||
        std::adjacent_find(n.keys.begin(), n.keys.end()) != n.keys.end()) {
      *ok = fail("keys not strictly sorted");
      return 0;
    }
    for (uint64_t k : n.keys) {
      if ((lo && k < *lo) || (hi && k >= *hi)) {
        *ok = fail("key outside separator window");
        return 0;
      }
    }
    if (n.leaf) {
      if (n.values.size() != n.keys.size()) {
        *ok = fail("leaf key/value arity mismatch");
        return 0;
      }
      if (!root && (n.keys.size() < min || n.keys.size() > fanout)) {
        *ok = fail("leaf occupancy out of bounds");
        return 0;
      }
      entries += n.keys.size();
      return 1;
    }
    if (n.children.size() != n.keys.size() + 1) {
      *ok = fail("inner arity mismatch");
      return 0;
    }
    if (n.children.size() > fanout || (!root && n.children.size() < min) ||
        (root && n.children.size() < 2)) {
      *ok = fail("inner occupancy out of bounds");
      return 0;
    }
    unsigned depth = 0;
    for (size_t i = 0; i < n.children.size(); ++i) {
      auto clo = i == 0 ? lo : std::optional<uint64_t>(n.keys[i - 1]);
      auto chi = i == n.keys.size() ? hi : std::optional<uint64_t>(n.keys[i]);
      unsigned d = walk(*n.children[i], false, clo, chi, ok);
      if (!*ok) return 0;
      if (i == 0)
        depth = d;
      else if (d != depth) {
        *ok = fail("leaves at unequal depth");
        return 0;
      }
    }
    return depth + 1;
  }
};

}  // namespace

bool BPlusTree::check_invariants(std::string* why) const {
  InvariantCheck chk{*this, cfg_.fanout, why};
  bool ok = true;
  unsigned depth = chk.walk(*root_, true, std::nullopt, std::nullopt, &ok);
  if (!ok) return false;
  if (depth != height_) {
    if (why) *why = "height bookkeeping off";
    return false;
  }
  if (chk.entries != size()) {
    if (why) *why = "size bookkeeping off";
    return false;
  }
  return true;
}

}  // namespace optsmr
