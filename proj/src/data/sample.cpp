#include "awt/data/sample.hpp"

#include "awt/error.hpp"

namespace awt {

std::string_view to_string(Domain d) { return d == Domain::inertia ? "inertia" : "trajectory"; }

Domain parse_domain(std::string_view s) {
  if (s == "inertia") return Domain::inertia;
  if (s == "trajectory") return Domain::trajectory;
  throw ValidationError("unknown domain '" + std::string(s) + "' (expected inertia or trajectory)");
}

void validate_sample(const Sample& s, Index min_length) {
  if (s.channels() != channels_for(s.domain)) {
    throw ValidationError("sample '" + s.id + "': " + std::string(to_string(s.domain)) + " needs " +
                          std::to_string(channels_for(s.domain)) + " channels, got " + std::to_string(s.channels()));
  }
  if (s.length() < min_length) {
    throw ValidationError("sample '" + s.id + "': length " + std::to_string(s.length()) + " < " +
                          std::to_string(min_length));
  }
  if (!s.values.allFinite()) throw ValidationError("sample '" + s.id + "': non-finite value");
  if (s.label < 0) throw ValidationError("sample '" + s.id + "': negative label");
}

}  // namespace awt
