#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <string>

// Golden JSON files live in ISTSIM_GOLDEN_DIR. Setting ISTSIM_UPDATE_GOLDEN=1
// rewrites them from the current output instead of comparing.
namespace golden {

inline void compare(const nlohmann::ordered_json& want, const nlohmann::ordered_json& got,
                    const std::string& path) {
  if (want.is_number_float() || got.is_number_float()) {
    ASSERT_TRUE(want.is_number() && got.is_number()) << path;
    const double a = want.get<double>(), b = got.get<double>();
    ASSERT_LE(std::abs(a - b), 1e-12 * std::max(1.0, std::abs(a))) << path << ": " << a << " vs " << b;
    return;
  }
  if (want.is_number_integer() && got.is_number_integer()) {
    ASSERT_EQ(want.get<std::int64_t>(), got.get<std::int64_t>()) << path;
    return;
  }
  ASSERT_EQ(want.type(), got.type()) << path;
  if (want.is_object()) {
    ASSERT_EQ(want.size(), got.size()) << path;
    for (auto it = want.begin(); it != want.end(); ++it) {
      ASSERT_TRUE(got.contains(it.key())) << path << "." << it.key();
      compare(it.value(), got.at(it.key()), path + "." + it.key());
    }
  } else if (want.is_array()) {
    ASSERT_EQ(want.size(), got.size()) << path;
    for (std::size_t i = 0; i < want.size(); ++i) {
      compare(want[i], got[i], path + "[" + std::to_string(i) + "]");
    }
  } else {
    ASSERT_EQ(want, got) << path;
  }
}

inline void check(const std::string& name, const nlohmann::ordered_json& got) {
  const std::string file = std::string(ISTSIM_GOLDEN_DIR) + "/" + name + ".json";
  const char* update = std::getenv("ISTSIM_UPDATE_GOLDEN");
  if (update != nullptr && std::string(update) == "1") {
    std::ofstream(file) << got.dump(2) << "\n";
    return;
  }
  std::ifstream in(file);
  ASSERT_TRUE(in.good()) << "missing golden file " << file;
  compare(nlohmann::ordered_json::parse(in), got, name);
}

}  // namespace golden
