#pragma once

#include <string>

#include "compovm/errors.hpp"

namespace compovm {

/// Property access flags. A property's access is a set of these.
enum Access : unsigned {
  kRead = 1u << 0,          // R : readable
  kWrite = 1u << 1,         // W : externally writable
  kBound = 1u << 2,         // B : observable; value changes emit events
  kIndexedRead = 1u << 3,   // IR: element read (array-typed properties only)
  kIndexedWrite = 1u << 4,  // IW: element write (array-typed properties only)
};

inline constexpr unsigned kAccessAll = kRead | kWrite | kBound | kIndexedRead | kIndexedWrite;

/// Small value type wrapping an access flag set.
class AccessSet {
 public:
  constexpr AccessSet() : bits_(0) {}
  constexpr explicit AccessSet(unsigned bits) : bits_(bits & kAccessAll) {}

  constexpr unsigned bits() const { return bits_; }
  constexpr bool has(Access a) const { return (bits_ & a) != 0; }
  constexpr bool readable() const { return has(kRead); }
  constexpr bool writable() const { return has(kWrite); }
  constexpr bool bound() const { return has(kBound); }
  constexpr bool indexed_readable() const { return has(kIndexedRead); }
  constexpr bool indexed_writable() const { return has(kIndexedWrite); }

  /// A property that can never change after construction: no whole-value
  /// write, no element write, no notifications.
  constexpr bool immutable() const {
    return !writable() && !bound() && !indexed_writable();
  }
  constexpr bool empty() const { return bits_ == 0; }

  constexpr bool operator==(const AccessSet& o) const { return bits_ == o.bits_; }
  constexpr bool operator!=(const AccessSet& o) const { return bits_ != o.bits_; }

  constexpr bool subset_of(const AccessSet& o) const { return (bits_ & ~o.bits_) == 0; }

  /// Bound properties must be readable: an observer that cannot read the
  /// value it is notified about is useless. Throws InvalidAccess.
  void ensure_valid() const {
    if (bound() && !readable())
      throw Error(Errc::InvalidAccess, "bound property must be readable (" + to_string() + ")");
  }

  std::string to_string() const {
    std::string s;
    if (has(kRead)) s += 'R';
    if (has(kWrite)) s += 'W';
    if (has(kBound)) s += 'B';
    if (has(kIndexedRead)) s += (s.empty() ? "IR" : " IR");
    if (has(kIndexedWrite)) s += (s.empty() ? "IW" : " IW");
    return s;
  }

 private:
  unsigned bits_;
};

/// Parse flags like "RWB" or "RB IR". Letters may be separated by spaces;
/// IR/IW are matched before R/W. Unknown or repeated letters are errors.
inline AccessSet parse_access(const std::string& text) {
  unsigned bits = 0;
  size_t i = 0;
  auto add = [&](Access a, const char* name) {
    if (bits & a) throw Error(Errc::InvalidAccess, std::string("duplicate flag ") + name);
    bits |= a;
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    if (c == 'I' && i + 1 < text.size() && text[i + 1] == 'R') {
      add(kIndexedRead, "IR");
      i += 2;
    } else if (c == 'I' && i + 1 < text.size() && text[i + 1] == 'W') {
      add(kIndexedWrite, "IW");
      i += 2;
    } else if (c == 'R') {
      add(kRead, "R");
      ++i;
    } else if (c == 'W') {
      add(kWrite, "W");
      ++i;
    } else if (c == 'B') {
      add(kBound, "B");
      ++i;
    } else {
      throw Error(Errc::InvalidAccess, std::string("unknown access flag '") + c + "'");
    }
  }
  return AccessSet(bits);
}

/// Remove `denied` flags from `from`. The deny set itself is unrestricted;
/// the result must still be a coherent access set (B without R is rejected).
inline AccessSet narrow_access(AccessSet from, AccessSet denied) {
  AccessSet result(from.bits() & ~denied.bits());
  result.ensure_valid();
  return result;
}

}  // namespace compovm
