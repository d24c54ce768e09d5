#ifndef CLS_TESTS_MODEL_FIXTURES_HPP
#define CLS_TESTS_MODEL_FIXTURES_HPP

#include "cls/aedes.hpp"

namespace cls_tests {

// Shared stage tables for unit tests. DD(1)=4 and the adult values line up
// with the worked rate examples.
inline cls::aedes::StageTables test_tables() {
  cls::aedes::StageTables t;
  t.dd[1] = 4;
  t.dd[2] = 3;
  t.dd[3] = 3;
  t.dd[4] = 3;
  t.dd[5] = 3;
  t.dd[6] = 2;
  for (int j = 1; j <= 6; ++j) t.bdr[j] = j == 1 ? 0.1 : 0.05;
  for (int j = 7; j <= 14; ++j) t.bdr[j] = 0.05;
  t.dur[7] = 0.5;
  for (int i = 8; i <= 15; ++i) t.dur[i] = 4.0;
  t.blood_threshold = 2;
  t.mtd_celsius = 8.8;
  return t;
}

}  // namespace cls_tests

#endif
