#pragma once

#include "percbf/common.hpp"
#include "percbf/replay/per_buffer.hpp"

#include <ostream>
#include <string>

namespace percbf {

enum class Label { Safe, Unsafe };

inline const char* to_string(Label l) { return l == Label::Safe ? "safe" : "unsafe"; }

/// One collected interaction. state_derivative is f(x) + g(x) u at the
/// applied control, evaluated at `state`.
struct Transition {
  Vector state;
  Vector control;
  Vector state_derivative;
  double distance = 0.0;
  Label label = Label::Safe;
};

/// Boundary states (distance == margin) are Safe.
inline Label classify(double distance, double unsafe_margin) {
  return distance < unsafe_margin ? Label::Unsafe : Label::Safe;
}

// Record file: one line per transition, comma separated, in this order:
//   index, state[0..n), control[0..m), state_derivative[0..n), distance, label, raw_priority
// label is 0 (safe) or 1 (unsafe). Doubles use 17 significant digits.
inline void write_records(const PerBuffer<Transition>& buffer, std::ostream& os) {
  const auto old_precision = os.precision(17);
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const Transition& t = buffer.item(i);
    os << i;
    for (Eigen::Index k = 0; k < t.state.size(); ++k) os << ',' << t.state[k];
    for (Eigen::Index k = 0; k < t.control.size(); ++k) os << ',' << t.control[k];
    for (Eigen::Index k = 0; k < t.state_derivative.size(); ++k) os << ',' << t.state_derivative[k];
    os << ',' << t.distance << ',' << (t.label == Label::Unsafe ? 1 : 0) << ','
       << buffer.raw_priority(i) << '\n';
  }
  os.precision(old_precision);
}

}  // namespace percbf
