#pragma once

#include <unistd.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "laecf/datasets.hpp"
#include "laecf/oracle.hpp"
#include "laecf/warnings.hpp"

namespace testutil {

inline laecf::datasets::InteractionMatrix interactions_from_dense(const Eigen::MatrixXd& x) {
  return laecf::oracle::to_interactions(x);
}

inline laecf::datasets::FeatureMatrix semantic_from_dense(const Eigen::MatrixXd& f) {
  return laecf::oracle::to_features(f);
}

// Three users {i0}, {i1}, {i0,i1}: X^T X = [[2,1],[1,2]].
inline Eigen::MatrixXd ease_fixture_x() {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 0, 1, 1, 1;
  return x;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() /
           ("laecf_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

struct WarningCapture {
  std::vector<std::string> messages;
  WarningCapture() {
    laecf::set_warning_handler([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() {
    laecf::set_warning_handler(
        [](const std::string& m) { std::cerr << "warning: " << m << "\n"; });
  }
  bool contains(const std::string& needle) const {
    for (const auto& m : messages)
      if (m.find(needle) != std::string::npos) return true;
    return false;
  }
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil
