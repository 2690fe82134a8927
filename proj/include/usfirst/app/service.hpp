#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "usfirst/app/commands.hpp"

namespace usfirst::app {

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

using QueryParams = std::map<std::string, std::string, std::less<>>;

/// Read-only view of a finished run directory, answering the operating-point
/// API. All state is loaded up front; handle() is const and thread-safe.
///
///   GET  /run/meta
///   GET  /grid?family=<name>[&mu=<m>&lambda=<l>]
///   GET  /curve?mu=<m>
///   POST /whatif  {"family", "delta_alpha", "delta_cov"}
class RunService {
 public:
  // Throws ParseError if an artifact is missing or malformed.
  static RunService load(const std::filesystem::path& run_dir);

  HttpResponse handle(std::string_view method, std::string_view path, const QueryParams& query,
                      std::string_view body) const;

  const RunConfig& config() const { return config_; }
  const DecisionCube& cube() const { return cube_; }
  const std::vector<CellMetrics>& metrics() const { return metrics_; }

 private:
  HttpResponse meta() const;
  HttpResponse grid(const QueryParams& query) const;
  HttpResponse curve(const QueryParams& query) const;
  HttpResponse whatif(std::string_view body) const;

  RunConfig config_;
  Calibrators calibs_;
  std::vector<PairRow> pairs_;
  DecisionCube cube_;
  EvalUsSet eval_us_;
  std::vector<CellMetrics> metrics_;
};

/// Minimal HTTP front end for a RunService.
class HttpServer {
 public:
  explicit HttpServer(const RunService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the port; port 0 picks a free one. -1 on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace usfirst::app
