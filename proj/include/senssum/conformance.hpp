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

// Wire-level conformance harness for external backends. The same golden
// messages are used for the toy backends and for any adapter.

#include <chrono>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "senssum/protocol.hpp"
#include "senssum/subprocess.hpp"

namespace senssum::conformance {

enum class Expect {
  ok,          // error null, id echoed
  id_echo,     // id echoed; error may or may not be set
  error_id,    // error set, id echoed
  error_any,   // error set, id unrecoverable
};

inline std::string_view to_string(Expect e) {
  switch (e) {
    case Expect::ok: return "ok";
    case Expect::id_echo: return "id_echo";
    case Expect::error_id: return "error_id";
    case Expect::error_any: return "error_any";
  }
  return "ok";
}

struct GoldenCase {
  std::string name;
  std::string line;  // raw request line as sent
  Expect expect = Expect::ok;
  std::string id;             // expected id for ok/id_echo/error_id
  std::optional<std::string> input;  // request input, when well-formed
};

inline std::vector<GoldenCase> golden_suite(Kind kind) {
  const std::string k(to_string(kind));
  auto req = [&](const std::string& id, const std::string& input, int beam = kDefaultBeamWidth) {
    return dump_wire(to_wire(TransduceRequest{id, input, beam}, kind));
  };
  std::string long_input;
  for (int i = 0; i < 2000; ++i) long_input += (i ? " w" : "w") + std::to_string(i % 97);
  const std::string escapes = "say \"hi\"\\ then\ttab\nnewline";
  const std::string unicode = "こんにちは 世界。 naïve café ünïcødé";

  std::vector<GoldenCase> s;
  s.push_back({"basic", req("g-basic", "hello world"), Expect::ok, "g-basic", "hello world"});
  s.push_back({"unicode", req("g-unicode", unicode), Expect::ok, "g-unicode", unicode});
  s.push_back({"json-escapes", req("g-escapes", escapes), Expect::ok, "g-escapes", escapes});
  s.push_back({"long-input", req("g-long", long_input), Expect::ok, "g-long", long_input});
  s.push_back({"empty-input", req("g-empty", ""), Expect::id_echo, "g-empty", ""});
  s.push_back({"beam-width-1", req("g-beam1", "one beam", 1), Expect::ok, "g-beam1", "one beam"});
  s.push_back({"unknown-field",
               R"({"id":"g-extra","kind":")" + k +
                   R"(","input":"extra field","beam_width":4,"x_future":true})",
               Expect::ok, "g-extra", "extra field"});
  s.push_back({"missing-input", R"({"id":"g-noinput","kind":")" + k + R"(","beam_width":4})",
               Expect::error_id, "g-noinput", std::nullopt});
  s.push_back({"zero-beam", req("g-beam0", "x", 0), Expect::error_id, "g-beam0", std::nullopt});
  s.push_back({"string-beam",
               R"({"id":"g-beamstr","kind":")" + k + R"(","input":"x","beam_width":"4"})",
               Expect::error_id, "g-beamstr", std::nullopt});
  s.push_back({"unknown-kind", R"({"id":"g-kind","kind":"translate","input":"x","beam_width":4})",
               Expect::error_id, "g-kind", std::nullopt});
  s.push_back({"numeric-id", R"({"id":7,"kind":")" + k + R"(","input":"x","beam_width":4})",
               Expect::error_any, "", std::nullopt});
  s.push_back({"not-an-object", "[1,2,3]", Expect::error_any, "", std::nullopt});
  s.push_back({"malformed-json", R"({"id":"g-mal","kind":)", Expect::error_any, "", std::nullopt});
  s.push_back({"after-malformed", req("g-after", "still alive"), Expect::ok, "g-after", "still alive"});
  return s;
}

inline nlohmann::ordered_json to_json(const GoldenCase& c) {
  nlohmann::ordered_json j;
  j["name"] = c.name;
  j["request"] = c.line;
  j["expect"] = std::string(to_string(c.expect));
  j["id"] = c.id;
  return j;
}

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Options {
  // Also require output == input on well-formed requests.
  bool expect_echo = false;
  std::size_t batch_size = 16;
};

// Validates one raw response line against a golden case.
inline CheckResult check_response(const GoldenCase& c, const std::string& line, const Options& opts) {
  CheckResult r{"wire." + c.name, false, ""};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const std::exception&) {
    r.detail = "response is not JSON";
    return r;
  }
  if (!j.is_object()) {
    r.detail = "response is not an object";
    return r;
  }
  std::set<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.insert(it.key());
  if (keys != std::set<std::string>{"id", "output", "score", "error"}) {
    r.detail = "response keys must be exactly id, output, score, error";
    return r;
  }
  if (!j["output"].is_string()) {
    r.detail = "output must be a string";
    return r;
  }
  TransduceResponse resp;
  try {
    resp = response_from_wire(j);
  } catch (const std::exception& e) {
    r.detail = e.what();
    return r;
  }
  const bool has_error = resp.error.has_value();
  switch (c.expect) {
    case Expect::ok:
      if (has_error) r.detail = "unexpected error: " + *resp.error;
      else if (resp.id != c.id) r.detail = "id not echoed";
      else if (opts.expect_echo && c.input && resp.output != *c.input) r.detail = "output differs from input";
      else r.passed = true;
      break;
    case Expect::id_echo:
      if (resp.id != c.id) r.detail = "id not echoed";
      else r.passed = true;
      break;
    case Expect::error_id:
      if (!has_error) r.detail = "expected an error";
      else if (resp.id != c.id) r.detail = "id not echoed on error";
      else r.passed = true;
      break;
    case Expect::error_any:
      if (!has_error) r.detail = "expected an error";
      else r.passed = true;
      break;
  }
  return r;
}

inline std::vector<CheckResult> run_wire_stdio(const BackendEndpoint& ep, const Options& opts) {
  std::vector<CheckResult> out;
  detail::Subprocess proc(ep.address);
  bool alive = true;
  for (const auto& c : golden_suite(ep.kind)) {
    if (!alive) {
      out.push_back({"wire." + c.name, false, "backend exited"});
      continue;
    }
    std::string line;
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(ep.timeout_sec));
    if (!proc.write_line(c.line)) {
      alive = false;
      out.push_back({"wire." + c.name, false, "write failed"});
      continue;
    }
    switch (proc.read_line(line, deadline)) {
      case detail::Subprocess::ReadStatus::line: out.push_back(check_response(c, line, opts)); break;
      case detail::Subprocess::ReadStatus::timeout:
        // A backend that stays silent cannot be resynchronised.
        alive = false;
        out.push_back({"wire." + c.name, false, "timeout"});
        break;
      case detail::Subprocess::ReadStatus::eof:
        alive = false;
        out.push_back({"wire." + c.name, false, "backend exited"});
        break;
    }
  }
  return out;
}

inline std::vector<CheckResult> run_wire_http(const BackendEndpoint& ep, const Options& opts) {
  std::vector<CheckResult> out;
  const auto addr = detail::parse_http_address(ep.address);
  httplib::Client cli(addr.host, addr.port);
  const auto to = std::chrono::duration<double>(ep.timeout_sec);
  cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(to));
  cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(to));
  for (const auto& c : golden_suite(ep.kind)) {
    const std::string name = "wire." + c.name;
    const bool parseable = nlohmann::json::accept(c.line);
    auto res = cli.Post("/transduce", "[" + c.line + "]", "application/json");
    if (!res) {
      out.push_back({name, false, "http error: " + httplib::to_string(res.error())});
      continue;
    }
    if (!parseable) {
      // A batch that is not JSON is rejected as a whole.
      const bool ok = res->status >= 400 && res->status < 500;
      out.push_back({name, ok, ok ? "" : "expected a 4xx status"});
      continue;
    }
    if (res->status != 200) {
      out.push_back({name, false, "status " + std::to_string(res->status)});
      continue;
    }
    nlohmann::json arr;
    try {
      arr = nlohmann::json::parse(res->body);
    } catch (const std::exception&) {
      out.push_back({name, false, "body is not JSON"});
      continue;
    }
    if (!arr.is_array() || arr.size() != 1) {
      out.push_back({name, false, "expected a one-element array"});
      continue;
    }
    out.push_back(check_response(c, arr[0].dump(), opts));
  }
  return out;
}

// Driver-level checks through the regular backend client.
inline std::vector<CheckResult> run_driver_checks(const BackendEndpoint& ep, const Options& opts) {
  std::vector<CheckResult> out;
  std::vector<TransduceRequest> reqs;
  for (std::size_t i = 0; i < opts.batch_size; ++i)
    reqs.push_back({"c-" + std::to_string(i), "request number " + std::to_string(i) + " " +
                                                  std::string(i % 5, 'x'),
                    kDefaultBeamWidth});
  std::vector<TransduceResponse> first;
  {
    CheckResult r{"driver.order", false, ""};
    try {
      auto backend = make_backend(ep);
      first = backend->transduce(reqs);
      r.passed = first.size() == reqs.size();
      for (std::size_t i = 0; r.passed && i < reqs.size(); ++i)
        if (first[i].id != reqs[i].id) r.passed = false;
      if (!r.passed) r.detail = "responses not in request order";
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    out.push_back(r);
  }
  {
    CheckResult r{"driver.no-errors", false, ""};
    r.passed = first.size() == reqs.size();
    for (const auto& x : first)
      if (!x.ok()) {
        r.passed = false;
        r.detail = x.id + ": " + *x.error;
        break;
      }
    if (first.empty()) r.detail = "no responses";
    out.push_back(r);
  }
  if (opts.expect_echo) {
    CheckResult r{"driver.echo", first.size() == reqs.size(), ""};
    for (std::size_t i = 0; r.passed && i < first.size(); ++i)
      if (first[i].output != reqs[i].input) r.passed = false;
    if (!r.passed) r.detail = "output differs from input";
    out.push_back(r);
  }
  {
    CheckResult r{"driver.stateless", false, ""};
    try {
      std::vector<TransduceRequest> rev(reqs.rbegin(), reqs.rend());
      auto backend = make_backend(ep);
      auto second = transduce_batch(*backend, rev);
      r.passed = first.size() == reqs.size();
      for (std::size_t i = 0; r.passed && i < rev.size(); ++i)
        if (second[i].output != first[rev.size() - 1 - i].output) r.passed = false;
      if (!r.passed) r.detail = "per-id output changes with request order";
    } catch (const std::exception& e) {
      r.detail = e.what();
    }
    out.push_back(r);
  }
  return out;
}

inline std::vector<CheckResult> run_conformance(const BackendEndpoint& ep, const Options& opts = {}) {
  ep.validate();
  auto out = ep.transport == Transport::http ? run_wire_http(ep, opts) : run_wire_stdio(ep, opts);
  auto more = run_driver_checks(ep, opts);
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return !results.empty();
}

}  // namespace senssum::conformance
