#ifndef CLS_REGISTRY_HPP
#define CLS_REGISTRY_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cls/error.hpp"
#include "cls/rule.hpp"

namespace cls {

// Named rate functions and exponent functions a model file may reference.
// The set is fixed when the registry is built; model files combine these
// names, nothing else.
class RateRegistry {
 public:
  using RateFactory = std::function<RateFn(const std::vector<std::int64_t>& args)>;
  using ExponentFn = std::function<std::uint64_t(std::int64_t arg)>;

  void add_rate(const std::string& name, RateFactory f) { rates_[name] = std::move(f); }
  void add_exponent(const std::string& name, ExponentFn f) { exponents_[name] = std::move(f); }

  bool has_rate(const std::string& name) const { return rates_.count(name) != 0; }
  bool has_exponent(const std::string& name) const { return exponents_.count(name) != 0; }

  RateFn rate(const std::string& name, const std::vector<std::int64_t>& args) const {
    auto it = rates_.find(name);
    if (it == rates_.end()) throw ModelError("unknown rate name: " + name);
    RateFn f = it->second(args);
    f.name = name;
    f.args = args;
    return f;
  }

  std::uint64_t exponent(const std::string& name, std::int64_t arg) const {
    auto it = exponents_.find(name);
    if (it == exponents_.end()) throw ModelError("unknown exponent function: " + name);
    return it->second(arg);
  }

 private:
  std::map<std::string, RateFactory> rates_;
  std::map<std::string, ExponentFn> exponents_;
};

}  // namespace cls

#endif
