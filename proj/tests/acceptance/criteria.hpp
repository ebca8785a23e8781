#pragma once

#include <functional>
#include <string>
#include <vector>

namespace nplab::acceptance {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

/// Every acceptance criterion, in reporting order.
std::vector<Criterion> all_criteria();

}  // namespace nplab::acceptance
