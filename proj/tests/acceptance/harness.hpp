#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vcap/train/ablation.hpp"
#include "vcap/train/trainer.hpp"

namespace vcap::acceptance {

/// Collects the checks of one criterion. The summary is shown on success,
/// the first few failures otherwise.
class Verdict {
 public:
  void require(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) failures_.push_back(what);
  }

  /// |actual - expected| <= tol, with both values in the failure text.
  void near(double actual, double expected, double tol, const std::string& what) {
    char buf[160];
    std::snprintf(buf, sizeof buf, " (got %.12g, expected %.12g, tol %.1e)", actual, expected, tol);
    require(std::fabs(actual - expected) <= tol, what + buf);
  }

  void exact(double actual, double expected, const std::string& what) { near(actual, expected, 0.0, what); }

  bool passed() const { return failures_.empty(); }
  std::size_t checks() const { return checks_; }
  const std::vector<std::string>& failures() const { return failures_; }

  std::string summary;

 private:
  std::size_t checks_ = 0;
  std::vector<std::string> failures_;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string format(const char* fmt, double a);
std::string format(const char* fmt, double a, double b);

/// State shared by the pipeline criteria: the default corpus on disk, loaded once.
struct Workspace {
  std::filesystem::path root;
  std::filesystem::path out_dir;  // empty: nothing kept
  std::vector<std::uint64_t> seeds{1, 2, 3};

  const data::DatasetManifest& manifest();
  const train::Dataset& dataset();
  /// The table3 ablation over `seeds`, run once and shared.
  const train::AblationReport& ablation();

 private:
  std::unique_ptr<data::DatasetManifest> manifest_;
  std::unique_ptr<train::Dataset> dataset_;
  std::unique_ptr<train::AblationReport> ablation_;
};

Verdict gradient_suite();
Verdict metric_oracles();
Verdict reinforce_properties();
Verdict pipeline_ordering(Workspace& ws);
Verdict overfit_sanity(Workspace& ws);
Verdict decoding_contracts(Workspace& ws);
Verdict determinism(Workspace& ws);
Verdict ablation_report(Workspace& ws);

}  // namespace vcap::acceptance
