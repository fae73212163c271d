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


#include <catch_amalgamated.hpp>

#include <filesystem>
#include <thread>

#include "senssum/protocol.hpp"
#include "senssum/toy.hpp"

using namespace senssum;
using namespace senssum::toy;

namespace {

std::vector<TransduceRequest> make_requests(std::size_t n, const std::string& prefix = "r") {
  std::vector<TransduceRequest> v;
  for (std::size_t i = 0; i < n; ++i)
    v.push_back({prefix + std::to_string(i), "input number " + std::to_string(i), kDefaultBeamWidth});
  return v;
}

BackendEndpoint stdio_ep(const std::string& args, int inflight = 1, double timeout = 10.0) {
  BackendEndpoint ep;
  ep.kind = Kind::asr;
  ep.transport = Transport::subprocess_stdio;
  ep.address = std::string(SENSSUM_MOCK_BACKEND) + " " + args;
  ep.max_inflight = inflight;
  ep.timeout_sec = timeout;
  ep.retry.initial_backoff = std::chrono::milliseconds(1);
  return ep;
}

void check_echo(const std::vector<TransduceRequest>& reqs, const std::vector<TransduceResponse>& out) {
  REQUIRE(out.size() == reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    CHECK(out[i].id == reqs[i].id);
    CHECK(out[i].ok());
    CHECK(out[i].output == reqs[i].input);
  }
}

// httplib server on an ephemeral port for the duration of a scope.
class TestServer {
 public:
  explicit TestServer(Handler h) {
    install_http_handler(server_, std::move(h));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("wire round trip", "[protocol][wire]") {
  const TransduceRequest req{"a1", "héllo \"world\"\n", 3};
  const auto w = request_from_wire(nlohmann::json::parse(dump_wire(to_wire(req, Kind::tsum))));
  CHECK(w.request == req);
  CHECK(w.kind == Kind::tsum);
  CHECK(dump_wire(to_wire(req, Kind::asr)) ==
        R"({"id":"a1","kind":"asr","input":"héllo \"world\"\n","beam_width":3})");

  TransduceResponse resp{"a1", "out", 0.5, std::nullopt};
  CHECK(dump_wire(to_wire(resp)) == R"({"id":"a1","output":"out","score":0.5,"error":null})");
  CHECK(response_from_wire(nlohmann::json::parse(dump_wire(to_wire(resp)))) == resp);
  TransduceResponse err{"x", "", std::nullopt, "boom"};
  CHECK(response_from_wire(to_wire(err)) == err);
}

TEST_CASE("request_from_wire is strict", "[protocol][wire]") {
  auto bad = [](const char* s) { return nlohmann::json::parse(s); };
  CHECK_THROWS_AS(request_from_wire(bad(R"([1])")), DataError);
  CHECK_THROWS_AS(request_from_wire(bad(R"({"kind":"asr","input":"x","beam_width":1})")), DataError);
  CHECK_THROWS_AS(request_from_wire(bad(R"({"id":1,"kind":"asr","input":"x","beam_width":1})")), DataError);
  CHECK_THROWS_AS(request_from_wire(bad(R"({"id":"a","kind":"mt","input":"x","beam_width":1})")), DataError);
  CHECK_THROWS_AS(request_from_wire(bad(R"({"id":"a","kind":"asr","beam_width":1})")), DataError);
  CHECK_THROWS_AS(request_from_wire(bad(R"({"id":"a","kind":"asr","input":"x","beam_width":0})")), DataError);
  CHECK_THROWS_AS(request_from_wire(bad(R"({"id":"a","kind":"asr","input":"x","beam_width":"4"})")), DataError);
  CHECK_THROWS_AS(request_from_wire(bad(R"({"id":"a","kind":"asr","input":"x"})")), DataError);
  CHECK_NOTHROW(request_from_wire(bad(R"({"id":"a","kind":"asr","input":"x","beam_width":1,"extra":7})")));
  CHECK_THROWS_AS(response_from_wire(bad(R"({"output":"x"})")), DataError);
  CHECK_THROWS_AS(response_from_wire(bad(R"({"id":"a","score":"high"})")), DataError);
}

TEST_CASE("serve_line", "[protocol][serve]") {
  const auto h = echo_handler();
  const auto ok = nlohmann::json::parse(serve_line(h, R"({"id":"q","kind":"asr","input":"hi","beam_width":1})"));
  CHECK(ok["id"] == "q");
  CHECK(ok["output"] == "hi");
  CHECK(ok["error"].is_null());
  const auto bad = nlohmann::json::parse(serve_line(h, R"({"id":"q","kind":"asr","beam_width":1})"));
  CHECK(bad["id"] == "q");
  CHECK(bad["error"].is_string());
  const auto garbage = nlohmann::json::parse(serve_line(h, "{not json"));
  CHECK(garbage["id"] == "");
  CHECK(garbage["error"].is_string());
  const Handler throwing = [](const TransduceRequest&) -> TransduceResponse { throw std::runtime_error("nope"); };
  const auto thrown = nlohmann::json::parse(serve_line(throwing, R"({"id":"z","kind":"asr","input":"","beam_width":1})"));
  CHECK(thrown["error"] == "nope");
}

TEST_CASE("batch driver on local backends", "[protocol][driver]") {
  LocalBackend echo(Kind::asr, echo_handler(), 3);
  CHECK(transduce_batch(echo, std::vector<TransduceRequest>{}).empty());
  const auto reqs = make_requests(3);
  check_echo(reqs, transduce_batch(echo, reqs));

  auto dup = reqs;
  dup[2].id = dup[0].id;
  CHECK_THROWS_AS(transduce_batch(echo, dup), InvalidInput);
  auto zero = reqs;
  zero[1].beam_width = 0;
  CHECK_THROWS_AS(transduce_batch(echo, zero), InvalidInput);

  LocalBackend throwing(Kind::asr, [](const TransduceRequest& r) -> TransduceResponse {
    if (r.id == "r1") throw std::runtime_error("bad item");
    return {r.id, "ok", std::nullopt, std::nullopt};
  });
  const auto out = transduce_batch(throwing, reqs);
  CHECK(out[0].ok());
  CHECK_FALSE(out[1].ok());
  CHECK(*out[1].error == "bad item");
  CHECK(out[2].ok());
}

namespace {

// Drops a response, which the driver must refuse.
class ShortBackend final : public Backend {
 public:
  Kind kind() const override { return Kind::asr; }
  std::vector<TransduceResponse> transduce(std::span<const TransduceRequest> reqs) override {
    std::vector<TransduceResponse> out;
    for (std::size_t i = 1; i < reqs.size(); ++i) out.push_back({reqs[i].id, "", std::nullopt, std::nullopt});
    return out;
  }
};

class SwappedBackend final : public Backend {
 public:
  Kind kind() const override { return Kind::asr; }
  std::vector<TransduceResponse> transduce(std::span<const TransduceRequest> reqs) override {
    std::vector<TransduceResponse> out;
    for (auto it = reqs.rbegin(); it != reqs.rend(); ++it) out.push_back({it->id, "", std::nullopt, std::nullopt});
    return out;
  }
};

}  // namespace

TEST_CASE("driver rejects contract violations", "[protocol][driver]") {
  const auto reqs = make_requests(2);
  ShortBackend s;
  SwappedBackend w;
  CHECK_THROWS_AS(transduce_batch(s, reqs), BackendError);
  CHECK_THROWS_AS(transduce_batch(w, reqs), BackendError);
}

TEST_CASE("mock ASR at rate zero is the identity", "[protocol][toy]") {
  LocalBackend asr(Kind::asr, mock_asr_handler(CorruptionChannel::with_total_rate(0.0, 9)));
  std::vector<TransduceRequest> reqs{{"a", "おはよう ございます", 1}, {"b", "hello there", 1}, {"c", "", 1}};
  const auto out = transduce_batch(asr, reqs);
  for (std::size_t i = 0; i < reqs.size(); ++i) CHECK(out[i].output == reqs[i].input);
}

TEST_CASE("cascade composition laws", "[protocol][cascade]") {
  const auto reqs = make_requests(5);
  LocalBackend id_asr(Kind::asr, echo_handler());
  LocalBackend id_tsum(Kind::tsum, echo_handler());
  const auto both = cascade_transduce(id_asr, id_tsum, reqs);
  check_echo(reqs, both);

  // cascade(identity, f) == e2e(f)
  const auto upper = [](const TransduceRequest& r) {
    TransduceResponse out{r.id, r.input + "!", std::nullopt, std::nullopt};
    return out;
  };
  LocalBackend f_tsum(Kind::tsum, upper);
  LocalBackend f_e2e(Kind::e2e, upper);
  CHECK(cascade_transduce(id_asr, f_tsum, reqs) == e2e_transduce(f_e2e, reqs));

  // stage errors are prefixed and skip later stages
  LocalBackend bad_asr(Kind::asr, [](const TransduceRequest& r) -> TransduceResponse {
    if (r.id == "r2") throw std::runtime_error("deaf");
    return {r.id, r.input, std::nullopt, std::nullopt};
  });
  std::size_t tsum_calls = 0;
  LocalBackend counting(Kind::tsum, [&](const TransduceRequest& r) {
    ++tsum_calls;
    return TransduceResponse{r.id, r.input, std::nullopt, std::nullopt};
  });
  const auto out = cascade_transduce(bad_asr, counting, reqs);
  CHECK(tsum_calls == 4);
  CHECK(*out[2].error == "asr: deaf");
  CHECK(out[3].ok());

  CHECK_THROWS_AS(cascade_transduce(id_tsum, id_tsum, reqs), InvalidInput);
  CHECK_THROWS_AS(e2e_transduce(id_asr, reqs), InvalidInput);
}

TEST_CASE("parse_endpoint", "[protocol][endpoint]") {
  const auto s = parse_endpoint(Kind::tsum, "stdio:python -m adapter");
  CHECK(s.transport == Transport::subprocess_stdio);
  CHECK(s.address == "python -m adapter");
  CHECK(s.kind == Kind::tsum);
  const auto h = parse_endpoint(Kind::asr, "http://localhost:8080");
  CHECK(h.transport == Transport::http);
  CHECK(h.address == "http://localhost:8080");
  CHECK_THROWS_AS(parse_endpoint(Kind::asr, "tcp://x"), InvalidInput);
  CHECK_THROWS_AS(parse_endpoint(Kind::asr, "stdio:"), InvalidInput);
  const auto a = detail::parse_http_address("http://10.0.0.1:99/x");
  CHECK(a.host == "10.0.0.1");
  CHECK(a.port == 99);
  CHECK(detail::parse_http_address("http://host").port == 80);
  BackendEndpoint bad = s;
  bad.max_inflight = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
}

TEST_CASE("stdio backend preserves order for any inflight window", "[protocol][stdio]") {
  const auto reqs = make_requests(12);
  for (const std::string mode : {"echo", "jitter", "reverse"}) {
    for (int inflight = 1; inflight <= 4; ++inflight) {
      INFO(mode << " inflight=" << inflight);
      StdioBackend b(stdio_ep(mode, inflight));
      check_echo(reqs, transduce_batch(b, reqs));
      // the child is reused across batches
      check_echo(reqs, transduce_batch(b, reqs));
    }
  }
}

TEST_CASE("stdio backend times out a hung request", "[protocol][stdio]") {
  auto reqs = make_requests(4);
  reqs[1].input = "please hang here";
  StdioBackend b(stdio_ep("hang", 2, 0.3));
  const auto out = transduce_batch(b, reqs);
  REQUIRE(out.size() == 4);
  CHECK_FALSE(out[1].ok());
  CHECK(out[1].error->find("timeout") != std::string::npos);
  for (std::size_t i : {0u, 2u, 3u}) {
    CHECK(out[i].ok());
    CHECK(out[i].output == reqs[i].input);
  }
}

TEST_CASE("stdio backend restarts a crashed child", "[protocol][stdio]") {
  const auto marker = std::filesystem::temp_directory_path() / "senssum_crash_once";
  std::filesystem::remove(marker);
  const auto reqs = make_requests(5);
  StdioBackend once(stdio_ep("crash-once " + marker.string(), 2));
  check_echo(reqs, transduce_batch(once, reqs));
  std::filesystem::remove(marker);

  StdioBackend crash(stdio_ep("crash 0", 1));
  try {
    transduce_batch(crash, reqs);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.failed_ids().size() == reqs.size());
    CHECK(e.failed_ids().front() == "r0");
  }

  // progress resets the failure budget, so a child that dies every two
  // answers still gets through the whole batch
  StdioBackend partial(stdio_ep("crash 2", 1));
  check_echo(reqs, transduce_batch(partial, reqs));
}

TEST_CASE("stdio backend gives up on garbage output", "[protocol][stdio]") {
  StdioBackend b(stdio_ep("garbage", 1));
  CHECK_THROWS_AS(transduce_batch(b, make_requests(2)), BackendError);
  auto ep = stdio_ep("", 1);
  ep.address = "/nonexistent/senssum-backend";
  StdioBackend missing(ep);
  CHECK_THROWS_AS(transduce_batch(missing, make_requests(1)), BackendError);
}

TEST_CASE("http backend", "[protocol][http]") {
  TestServer server(echo_handler());
  const auto reqs = make_requests(10);
  for (int inflight : {1, 4}) {
    auto ep = parse_endpoint(Kind::asr, server.url());
    ep.max_inflight = inflight;
    HttpBackend b(ep);
    check_echo(reqs, transduce_batch(b, reqs));
  }

  // raw POST: malformed body is 400, array answers in order
  httplib::Client cli(server.url());
  auto bad = cli.Post("/transduce", "{oops", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  auto two = cli.Post("/transduce",
                      R"([{"id":"x","kind":"asr","input":"1","beam_width":1},{"id":"y","kind":"asr","input":"2","beam_width":1}])",
                      "application/json");
  REQUIRE(two);
  const auto arr = nlohmann::json::parse(two->body);
  REQUIRE(arr.size() == 2);
  CHECK(arr[0]["id"] == "x");
  CHECK(arr[1]["output"] == "2");
}

TEST_CASE("http backend reports unreachable servers", "[protocol][http]") {
  // nothing listens on port 1
  auto ep = parse_endpoint(Kind::asr, "http://127.0.0.1:1");
  ep.retry.attempts = 2;
  ep.retry.initial_backoff = std::chrono::milliseconds(1);
  ep.timeout_sec = 1.0;
  HttpBackend b(ep);
  try {
    transduce_batch(b, make_requests(3));
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.failed_ids().size() == 3);
  }
}
