#pragma once

#include <string>
#include <vector>

#include "baxq/algebra.hpp"

namespace baxq {

// Resolved run configuration: model parameters plus run-shaping lists.
// Serialized as flat key=value lines; dump(load(dump(x))) == dump(x) byte for
// byte.
struct RunConfig {
  ModelParams params;
  std::vector<std::string> relations{"commutativity", "tq", "factorization",
                                     "wronskian", "plus", "fusion"};
  std::vector<double> j_list{2, 3, 4, 5, 6, 7, 8};
  std::string sweep_key;
  std::vector<std::string> sweep_values;
  bool out_matrices = false;

  static RunConfig defaults();
};

std::string format_complex(Complex z);
Complex parse_complex(const std::string& s);

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key,
                    const std::string& value);
std::string dump_config(const RunConfig& cfg);

}  // namespace baxq
