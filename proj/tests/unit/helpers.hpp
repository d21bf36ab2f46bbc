#pragma once

#include "kolmo/model.hpp"

#include <string>

#ifndef KOLMO_TEST_DATA
#error "KOLMO_TEST_DATA must be defined"
#endif

namespace kolmo::test {

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline Model data_model(const std::string& name) { return load_model(std::string(KOLMO_TEST_DATA) + "/" + name); }

inline Mat langevin_B() {
  Mat B = Mat::Zero(2, 2);
  B(1, 0) = 1.0;
  return B;
}

inline Mat chain3_B() {
  Mat B = Mat::Zero(3, 3);
  B(1, 0) = 1.0;
  B(2, 1) = 1.0;
  return B;
}

}  // namespace kolmo::test
