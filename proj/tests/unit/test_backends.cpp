#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logistory/backends.hpp"
#include "test_support.hpp"

using namespace logistory;
using namespace logistory::testing;
using namespace std::chrono_literals;

namespace {

// Fails with `kind` for the first `failures` calls, then answers "ok".
std::shared_ptr<ScriptedBackend> flaky(int failures, BackendErrorKind kind) {
  auto left = std::make_shared<int>(failures);
  return std::make_shared<ScriptedBackend>([=](const BackendRequest&) {
    if ((*left)-- > 0) throw BackendError(kind, "boom", 503);
    return text_response("ok");
  });
}

}  // namespace

TEST_CASE("retry with exponential backoff, every attempt reported") {
  auto b = flaky(2, BackendErrorKind::server);
  std::vector<std::chrono::milliseconds> slept;
  std::vector<AttemptRecord> attempts;
  RetryPolicy p;
  p.max_attempts = 3;
  p.base_backoff_ms = 100;
  p.backoff_multiplier = 2;
  BackendRequest req;
  const auto r = invoke(*b, req, p, [&](const AttemptRecord& a) { attempts.push_back(a); },
                        [&](std::chrono::milliseconds d) { slept.push_back(d); });
  CHECK(r.text == "ok");
  CHECK(slept == std::vector<std::chrono::milliseconds>{100ms, 200ms});
  REQUIRE(attempts.size() == 3);
  CHECK_FALSE(attempts[0].ok);
  CHECK(attempts[0].error_kind == "server");
  CHECK(attempts[2].ok);
  CHECK(attempts[2].attempt == 3);
}

TEST_CASE("non-retryable errors and exhaustion rethrow") {
  RetryPolicy p;
  p.max_attempts = 3;
  auto no_sleep = [](std::chrono::milliseconds) {};
  auto auth = flaky(5, BackendErrorKind::auth);
  try {
    invoke(*auth, BackendRequest{}, p, {}, no_sleep);
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::auth);
  }
  CHECK(auth->requests().size() == 1);
  auto down = flaky(5, BackendErrorKind::transport);
  CHECK_THROWS_AS(invoke(*down, BackendRequest{}, p, {}, no_sleep), BackendError);
  CHECK(down->requests().size() == 3);
}

TEST_CASE("retry policy JSON and backoff") {
  RetryPolicy p;
  p.base_backoff_ms = 10;
  p.backoff_multiplier = 3;
  CHECK(p.backoff_ms(0) == 0.0);
  CHECK(p.backoff_ms(1) == 10.0);
  CHECK(p.backoff_ms(3) == 90.0);
  const RetryPolicy back = json(p).get<RetryPolicy>();
  CHECK(back.retryable == p.retryable);
  CHECK(back.base_backoff_ms == 10.0);
}

TEST_CASE("fingerprint covers content, not paths") {
  TempDir tmp;
  write_text(tmp / "a" / "x.png", "IMAGE");
  write_text(tmp / "b" / "y.png", "IMAGE");
  write_text(tmp / "c.png", "OTHER");
  BackendRequest r1, r2, r3;
  r1.capability = r2.capability = r3.capability = Capability::caption;
  r1.payload = r2.payload = r3.payload = {{"prompt", "describe"}};
  r1.images = {{tmp / "a" / "x.png", "image/png"}};
  r2.images = {{tmp / "b" / "y.png", "image/png"}};
  r3.images = {{tmp / "c.png", "image/png"}};
  CHECK(r1.fingerprint() == r2.fingerprint());
  CHECK(r1.fingerprint() != r3.fingerprint());
  BackendRequest r4 = r1;
  r4.model_id = "other";
  CHECK(r4.fingerprint() != r1.fingerprint());
  BackendRequest missing = r1;
  missing.images = {{tmp / "nope.png", "image/png"}};
  CHECK_THROWS_AS(missing.fingerprint(), BackendError);
}

TEST_CASE("rate limiter waits for the window to slide") {
  auto now = std::chrono::steady_clock::time_point{};
  std::vector<std::chrono::milliseconds> waits;
  RateLimiter rl(2, 1000ms, [&] { return now; }, [&](std::chrono::milliseconds d) {
    waits.push_back(d);
    now += d;
  });
  rl.acquire();
  now += 100ms;
  rl.acquire();
  CHECK(waits.empty());
  rl.acquire();
  REQUIRE(waits.size() == 1);
  CHECK(waits[0] == 900ms);
}

TEST_CASE("registry roles and alternatives") {
  BackendRegistry reg;
  auto b = flaky(0, BackendErrorKind::server);
  reg.set("planner", {b, "model-a", {}});
  CHECK(reg.has("planner"));
  CHECK_FALSE(reg.has("editor"));
  try {
    reg.require("editor", Capability::edit_image);
    FAIL("expected not_configured");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::not_configured);
    CHECK(std::string(e.what()).find("editor") != std::string::npos);
  }
  reg.call("planner", BackendRequest{});
  CHECK(b->requests().at(0).model_id == "model-a");
  reg.add_alternative("editor", "second", {b, "model-b", {}});
  CHECK(reg.alternative("editor", "second")->model_id == "model-b");
  CHECK(reg.alternative("editor", "third") == nullptr);
}

TEST_CASE("embed_batch checks dimensions") {
  auto good = std::make_shared<ScriptedBackend>([](const BackendRequest& r) {
    BackendResponse out;
    for (std::size_t i = 0; i < r.payload.at("inputs").size(); ++i) out.embeddings.push_back({1.0, 0.0});
    return out;
  });
  CHECK(embed_batch(*good, std::vector<std::string>{"a", "b"}, "m", RetryPolicy{}).size() == 2);
  auto ragged = std::make_shared<ScriptedBackend>([](const BackendRequest&) {
    BackendResponse out;
    out.embeddings = {{1.0, 0.0}, {1.0}};
    return out;
  });
  CHECK_THROWS_AS(embed_batch(*ragged, std::vector<std::string>{"a", "b"}, "m", RetryPolicy{}), BackendError);
  auto short_reply = std::make_shared<ScriptedBackend>([](const BackendRequest&) {
    BackendResponse out;
    out.embeddings = {{1.0}};
    return out;
  });
  CHECK_THROWS_AS(embed_batch(*short_reply, std::vector<std::string>{"a", "b"}, "m", RetryPolicy{}), BackendError);
}

TEST_CASE("file helpers") {
  TempDir tmp;
  write_file_bytes(tmp / "sub" / "f.bin", std::string("a\0b", 3));
  CHECK(read_file_bytes(tmp / "sub" / "f.bin") == std::string("a\0b", 3));
  CHECK_THROWS_AS(read_file_bytes(tmp / "missing"), Error);
  CHECK(media_type_for("x.png") == "image/png");
  CHECK(media_type_for("x.ppm") == "image/x-portable-pixmap");
  CHECK(extension_for("image/png") == "png");
  CHECK(parse_capability("edit_image") == Capability::edit_image);
  CHECK_THROWS_AS(parse_capability("paint"), DomainError);
}
