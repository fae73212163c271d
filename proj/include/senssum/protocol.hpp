// Copyright 2026 The senssum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Transducer backends and their JSON wire protocol.
//
// Every model role (ASR, TSum, E2E, judge) sits behind Backend. The batch
// driver is the only component that reorders: backends may answer in any
// order, callers always receive responses in request order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "senssum/error.hpp"
#include "senssum/subprocess.hpp"

namespace senssum {

enum class Kind { asr, tsum, e2e, judge };
enum class Transport { subprocess_stdio, http };

inline std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::asr: return "asr";
    case Kind::tsum: return "tsum";
    case Kind::e2e: return "e2e";
    case Kind::judge: return "judge";
  }
  return "asr";
}

inline std::optional<Kind> parse_kind(std::string_view s) {
  if (s == "asr") return Kind::asr;
  if (s == "tsum") return Kind::tsum;
  if (s == "e2e") return Kind::e2e;
  if (s == "judge") return Kind::judge;
  return std::nullopt;
}

inline constexpr int kDefaultBeamWidth = 4;

struct TransduceRequest {
  std::string id;
  std::string input;
  int beam_width = kDefaultBeamWidth;

  friend bool operator==(const TransduceRequest&, const TransduceRequest&) = default;
};

struct TransduceResponse {
  std::string id;
  std::string output;
  std::optional<double> score;
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }

  friend bool operator==(const TransduceResponse&, const TransduceResponse&) = default;
};

// Wire messages -----------------------------------------------------------

inline nlohmann::ordered_json to_wire(const TransduceRequest& r, Kind kind) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["kind"] = std::string(to_string(kind));
  j["input"] = r.input;
  j["beam_width"] = r.beam_width;
  return j;
}

inline nlohmann::ordered_json to_wire(const TransduceResponse& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["output"] = r.output;
  j["score"] = r.score ? nlohmann::ordered_json(*r.score) : nlohmann::ordered_json();
  j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json();
  return j;
}

inline std::string dump_wire(const nlohmann::ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

struct WireRequest {
  TransduceRequest request;
  Kind kind = Kind::asr;
};

// Throws DataError on any schema violation.
inline WireRequest request_from_wire(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("request is not a JSON object");
  auto get_str = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string())
      throw DataError(std::string("request field '") + key + "' must be a string");
    return it->get<std::string>();
  };
  WireRequest w;
  w.request.id = get_str("id");
  const auto kind = parse_kind(get_str("kind"));
  if (!kind) throw DataError("request field 'kind' has unknown value");
  w.kind = *kind;
  w.request.input = get_str("input");
  auto bw = j.find("beam_width");
  if (bw == j.end() || !bw->is_number_integer() || bw->get<long long>() < 1)
    throw DataError("request field 'beam_width' must be a positive integer");
  w.request.beam_width = bw->get<int>();
  return w;
}

inline TransduceResponse response_from_wire(const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("response is not a JSON object");
  TransduceResponse r;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) throw DataError("response field 'id' must be a string");
  r.id = id->get<std::string>();
  auto out = j.find("output");
  if (out != j.end() && !out->is_null()) {
    if (!out->is_string()) throw DataError("response field 'output' must be a string");
    r.output = out->get<std::string>();
  }
  auto sc = j.find("score");
  if (sc != j.end() && !sc->is_null()) {
    if (!sc->is_number()) throw DataError("response field 'score' must be a number or null");
    r.score = sc->get<double>();
  }
  auto err = j.find("error");
  if (err != j.end() && !err->is_null()) {
    if (!err->is_string()) throw DataError("response field 'error' must be a string or null");
    r.error = err->get<std::string>();
  }
  return r;
}

// Endpoints ---------------------------------------------------------------

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{250};

  std::chrono::milliseconds backoff(int failure_index) const {
    return initial_backoff * (1 << std::min(failure_index, 16));
  }
};

struct BackendEndpoint {
  Kind kind = Kind::asr;
  Transport transport = Transport::subprocess_stdio;
  std::string address;  // shell command line or http://host:port
  double timeout_sec = 30.0;
  int max_inflight = 1;
  RetryPolicy retry;

  void validate() const {
    if (max_inflight < 1) throw InvalidInput("endpoint: max_inflight must be >= 1");
    if (!(timeout_sec > 0.0)) throw InvalidInput("endpoint: timeout_sec must be positive");
    if (address.empty()) throw InvalidInput("endpoint: empty address");
    if (retry.attempts < 1) throw InvalidInput("endpoint: retry attempts must be >= 1");
  }
};

// "stdio:<command>" or "http://host:port".
inline BackendEndpoint parse_endpoint(Kind kind, std::string_view spec) {
  BackendEndpoint e;
  e.kind = kind;
  if (spec.starts_with("stdio:")) {
    e.transport = Transport::subprocess_stdio;
    e.address = std::string(spec.substr(6));
  } else if (spec.starts_with("http://")) {
    e.transport = Transport::http;
    e.address = std::string(spec);
  } else {
    throw InvalidInput("endpoint spec must start with 'stdio:' or 'http://': " + std::string(spec));
  }
  e.validate();
  return e;
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Kind kind() const = 0;
  // One response per request, in request order. Per-request failures are
  // error responses; exhausted transport retries throw BackendError.
  virtual std::vector<TransduceResponse> transduce(std::span<const TransduceRequest> reqs) = 0;
};

using Handler = std::function<TransduceResponse(const TransduceRequest&)>;

namespace detail {

inline void check_batch(std::span<const TransduceRequest> reqs) {
  std::unordered_set<std::string_view> ids;
  for (const auto& r : reqs) {
    if (!ids.insert(r.id).second) throw InvalidInput("duplicate request id '" + r.id + "'");
    if (r.beam_width < 1) throw InvalidInput("request '" + r.id + "': beam_width must be >= 1");
  }
}

inline TransduceResponse error_response(const std::string& id, std::string msg) {
  TransduceResponse r;
  r.id = id;
  r.error = std::move(msg);
  return r;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const auto w = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(w);
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// In-process backend around a handler. Handler exceptions become error
// responses. Timeouts are not enforced in-process.
class LocalBackend final : public Backend {
 public:
  LocalBackend(Kind kind, Handler handler, int max_inflight = 1)
      : kind_(kind), handler_(std::move(handler)), max_inflight_(max_inflight) {
    if (max_inflight_ < 1) throw InvalidInput("LocalBackend: max_inflight must be >= 1");
  }

  Kind kind() const override { return kind_; }

  std::vector<TransduceResponse> transduce(std::span<const TransduceRequest> reqs) override {
    std::vector<TransduceResponse> out(reqs.size());
    detail::parallel_for(reqs.size(), max_inflight_, [&](std::size_t i) {
      try {
        out[i] = handler_(reqs[i]);
        out[i].id = reqs[i].id;
      } catch (const std::exception& e) {
        out[i] = detail::error_response(reqs[i].id, e.what());
      }
    });
    return out;
  }

 private:
  Kind kind_;
  Handler handler_;
  int max_inflight_;
};

// Newline-delimited JSON over a child process's stdin/stdout. Up to
// max_inflight requests are written ahead; responses are matched by id. A
// request that outlives timeout_sec gets an error response and the child is
// restarted, since it may be wedged. EOF or unparseable output is a transport
// failure: the child is restarted and unanswered requests are resent, up to
// retry.attempts consecutive failures without progress.
class StdioBackend final : public Backend {
 public:
  explicit StdioBackend(BackendEndpoint ep) : ep_(std::move(ep)) {
    ep_.validate();
    if (ep_.transport != Transport::subprocess_stdio)
      throw InvalidInput("StdioBackend: endpoint transport is not subprocess_stdio");
  }

  Kind kind() const override { return ep_.kind; }

  std::vector<TransduceResponse> transduce(std::span<const TransduceRequest> reqs) override {
    using clock = std::chrono::steady_clock;
    std::vector<std::optional<TransduceResponse>> results(reqs.size());
    std::deque<std::size_t> pending;
    for (std::size_t i = 0; i < reqs.size(); ++i) pending.push_back(i);
    std::unordered_map<std::string, std::pair<std::size_t, clock::time_point>> outstanding;
    std::vector<std::size_t> send_order;
    int failures = 0;
    const auto timeout = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(ep_.timeout_sec));

    auto requeue_outstanding = [&] {
      std::vector<std::size_t> idx;
      for (const auto& [id, v] : outstanding) idx.push_back(v.first);
      std::sort(idx.begin(), idx.end(), std::greater<>());
      for (auto i : idx) pending.push_front(i);
      outstanding.clear();
    };
    auto transport_failure = [&](const std::string& why) {
      proc_.reset();
      requeue_outstanding();
      if (++failures >= ep_.retry.attempts) {
        std::vector<std::string> ids;
        for (auto i : pending) ids.push_back(reqs[i].id);
        throw BackendError("stdio backend '" + ep_.address + "' failed after " +
                               std::to_string(failures) + " attempts: " + why,
                           std::move(ids));
      }
      std::this_thread::sleep_for(ep_.retry.backoff(failures - 1));
    };

    while (!pending.empty() || !outstanding.empty()) {
      if (!proc_) proc_ = std::make_unique<detail::Subprocess>(ep_.address);

      bool write_failed = false;
      while (!pending.empty() && outstanding.size() < static_cast<std::size_t>(ep_.max_inflight)) {
        const std::size_t i = pending.front();
        if (!proc_->write_line(dump_wire(to_wire(reqs[i], ep_.kind)))) {
          write_failed = true;
          break;
        }
        pending.pop_front();
        outstanding[reqs[i].id] = {i, clock::now() + timeout};
      }
      if (write_failed) {
        transport_failure("write to child failed");
        continue;
      }

      auto deadline = clock::time_point::max();
      for (const auto& [id, v] : outstanding) deadline = std::min(deadline, v.second);

      std::string line;
      const auto st = proc_->read_line(line, deadline);
      if (st == detail::Subprocess::ReadStatus::eof) {
        transport_failure("child closed its output");
        continue;
      }
      if (st == detail::Subprocess::ReadStatus::timeout) {
        const auto now = clock::now();
        for (auto it = outstanding.begin(); it != outstanding.end();) {
          if (it->second.second <= now) {
            results[it->second.first] = detail::error_response(
                it->first, "timeout after " + std::to_string(ep_.timeout_sec) + " s");
            it = outstanding.erase(it);
          } else {
            ++it;
          }
        }
        proc_.reset();
        requeue_outstanding();
        continue;
      }
      TransduceResponse resp;
      try {
        resp = response_from_wire(nlohmann::json::parse(line));
      } catch (const std::exception& e) {
        transport_failure(std::string("malformed response line: ") + e.what());
        continue;
      }
      auto it = outstanding.find(resp.id);
      if (it == outstanding.end()) continue;  // late or unknown id
      results[it->second.first] = std::move(resp);
      outstanding.erase(it);
      failures = 0;
    }

    std::vector<TransduceResponse> out;
    out.reserve(results.size());
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
  }

 private:
  BackendEndpoint ep_;
  std::unique_ptr<detail::Subprocess> proc_;
};

namespace detail {

struct HttpAddress {
  std::string host;
  int port = 80;
};

inline HttpAddress parse_http_address(std::string_view url) {
  if (!url.starts_with("http://")) throw InvalidInput("http endpoint must start with http://");
  std::string_view rest = url.substr(7);
  if (auto slash = rest.find('/'); slash != std::string_view::npos) rest = rest.substr(0, slash);
  HttpAddress a;
  if (auto colon = rest.rfind(':'); colon != std::string_view::npos) {
    a.host = std::string(rest.substr(0, colon));
    a.port = std::stoi(std::string(rest.substr(colon + 1)));
  } else {
    a.host = std::string(rest);
  }
  if (a.host.empty()) throw InvalidInput("http endpoint has no host");
  return a;
}

}  // namespace detail

// POST /transduce with a JSON array. Each request travels in its own
// one-element array so at most max_inflight are outstanding. A read that
// ran into the timeout is a per-request error; connection failures, non-200
// statuses and malformed bodies are retried with exponential backoff.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendEndpoint ep, httplib::Headers headers = {})
      : ep_(std::move(ep)), headers_(std::move(headers)) {
    ep_.validate();
    if (ep_.transport != Transport::http)
      throw InvalidInput("HttpBackend: endpoint transport is not http");
    addr_ = detail::parse_http_address(ep_.address);
  }

  Kind kind() const override { return ep_.kind; }

  std::vector<TransduceResponse> transduce(std::span<const TransduceRequest> reqs) override {
    std::vector<TransduceResponse> out(reqs.size());
    std::vector<char> failed(reqs.size(), 0);
    std::mutex err_mu;
    std::string last_error;

    const auto secs = static_cast<time_t>(ep_.timeout_sec);
    const auto usecs = static_cast<time_t>((ep_.timeout_sec - static_cast<double>(secs)) * 1e6);

    detail::parallel_for(reqs.size(), ep_.max_inflight, [&](std::size_t i) {
      httplib::Client cli(addr_.host, addr_.port);
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      const std::string body =
          dump_wire(nlohmann::ordered_json::array({to_wire(reqs[i], ep_.kind)}));
      std::string why;
      for (int attempt = 0; attempt < ep_.retry.attempts; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(ep_.retry.backoff(attempt - 1));
        const auto start = std::chrono::steady_clock::now();
        auto res = cli.Post("/transduce", headers_, body, "application/json");
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!res) {
          if (res.error() == httplib::Error::Read && elapsed >= 0.9 * ep_.timeout_sec) {
            out[i] = detail::error_response(
                reqs[i].id, "timeout after " + std::to_string(ep_.timeout_sec) + " s");
            return;
          }
          why = httplib::to_string(res.error());
          continue;
        }
        if (res->status != 200) {
          why = "HTTP status " + std::to_string(res->status);
          continue;
        }
        try {
          const auto arr = nlohmann::json::parse(res->body);
          if (!arr.is_array() || arr.size() != 1) throw DataError("expected one-element array");
          auto resp = response_from_wire(arr[0]);
          if (resp.id != reqs[i].id) throw DataError("response id mismatch");
          out[i] = std::move(resp);
          return;
        } catch (const std::exception& e) {
          why = std::string("malformed response: ") + e.what();
        }
      }
      failed[i] = 1;
      std::lock_guard lock(err_mu);
      last_error = why;
    });

    std::vector<std::string> ids;
    for (std::size_t i = 0; i < reqs.size(); ++i)
      if (failed[i]) ids.push_back(reqs[i].id);
    if (!ids.empty())
      throw BackendError("http backend '" + ep_.address + "' failed after " +
                             std::to_string(ep_.retry.attempts) + " attempts: " + last_error,
                         std::move(ids));
    return out;
  }

 private:
  BackendEndpoint ep_;
  httplib::Headers headers_;
  detail::HttpAddress addr_;
};

inline std::unique_ptr<Backend> make_backend(const BackendEndpoint& ep,
                                             httplib::Headers headers = {}) {
  if (ep.transport == Transport::http) return std::make_unique<HttpBackend>(ep, std::move(headers));
  return std::make_unique<StdioBackend>(ep);
}

// Batch driver: validates the batch and enforces the one-response-per-request,
// request-order contract regardless of backend behavior.
inline std::vector<TransduceResponse> transduce_batch(Backend& backend,
                                                      std::span<const TransduceRequest> reqs) {
  detail::check_batch(reqs);
  if (reqs.empty()) return {};
  auto out = backend.transduce(reqs);
  if (out.size() != reqs.size())
    throw BackendError("backend returned " + std::to_string(out.size()) + " responses for " +
                       std::to_string(reqs.size()) + " requests");
  for (std::size_t i = 0; i < reqs.size(); ++i)
    if (out[i].id != reqs[i].id)
      throw BackendError("backend response order violated at '" + reqs[i].id + "'");
  return out;
}

inline std::vector<TransduceResponse> transduce_batch(const BackendEndpoint& ep,
                                                      std::span<const TransduceRequest> reqs) {
  auto backend = make_backend(ep);
  return transduce_batch(*backend, reqs);
}

// s = TSum(ASR(x)). Requests whose ASR stage failed skip TSum and carry the
// error prefixed with "asr: "; TSum errors are prefixed "tsum: ".
inline std::vector<TransduceResponse> cascade_transduce(Backend& asr, Backend& tsum,
                                                        std::span<const TransduceRequest> reqs) {
  if (asr.kind() != Kind::asr) throw InvalidInput("cascade_transduce: first stage is not asr");
  if (tsum.kind() != Kind::tsum) throw InvalidInput("cascade_transduce: second stage is not tsum");

  std::vector<TransduceResponse> asr_out;
  try {
    asr_out = transduce_batch(asr, reqs);
  } catch (const BackendError& e) {
    throw BackendError(std::string("asr stage: ") + e.what(), e.failed_ids());
  }

  std::vector<TransduceRequest> second;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    if (!asr_out[i].ok()) continue;
    second.push_back({reqs[i].id, asr_out[i].output, reqs[i].beam_width});
    index.push_back(i);
  }
  std::vector<TransduceResponse> tsum_out;
  try {
    tsum_out = transduce_batch(tsum, second);
  } catch (const BackendError& e) {
    throw BackendError(std::string("tsum stage: ") + e.what(), e.failed_ids());
  }

  std::vector<TransduceResponse> out(reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i)
    if (!asr_out[i].ok()) out[i] = detail::error_response(reqs[i].id, "asr: " + *asr_out[i].error);
  for (std::size_t k = 0; k < index.size(); ++k) {
    auto& r = tsum_out[k];
    if (!r.ok()) r.error = "tsum: " + *r.error;
    out[index[k]] = std::move(r);
  }
  return out;
}

// s = E2E(x).
inline std::vector<TransduceResponse> e2e_transduce(Backend& e2e,
                                                    std::span<const TransduceRequest> reqs) {
  if (e2e.kind() != Kind::e2e) throw InvalidInput("e2e_transduce: backend is not e2e");
  return transduce_batch(e2e, reqs);
}

// Serving ----------------------------------------------------------------

// Answers one wire line. Malformed requests produce an error response whose
// id is echoed when recoverable.
inline std::string serve_line(const Handler& handler, std::string_view line) {
  nlohmann::json j;
  std::string id;
  try {
    j = nlohmann::json::parse(line);
    if (j.is_object() && j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
    const auto w = request_from_wire(j);
    TransduceResponse r;
    try {
      r = handler(w.request);
    } catch (const std::exception& e) {
      r = detail::error_response(w.request.id, e.what());
    }
    r.id = w.request.id;
    return dump_wire(to_wire(r));
  } catch (const std::exception& e) {
    return dump_wire(to_wire(detail::error_response(id, std::string("bad request: ") + e.what())));
  }
}

// Serves newline-delimited JSON until EOF.
inline void serve_stdio(const Handler& handler, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << serve_line(handler, line) << '\n' << std::flush;
  }
}

// Installs POST /transduce on an httplib server.
inline void install_http_handler(httplib::Server& server, Handler handler) {
  server.Post("/transduce", [handler = std::move(handler)](const httplib::Request& req,
                                                           httplib::Response& res) {
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(req.body);
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(std::string("malformed JSON: ") + e.what(), "text/plain");
      return;
    }
    if (!arr.is_array()) {
      res.status = 400;
      res.set_content("expected a JSON array of requests", "text/plain");
      return;
    }
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& j : arr) out.push_back(nlohmann::ordered_json::parse(serve_line(handler, j.dump())));
    res.set_content(dump_wire(out), "application/json");
  });
}

}  // namespace senssum
