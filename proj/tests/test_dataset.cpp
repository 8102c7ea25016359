#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "anx/dataset.hpp"
#include "anx/error.hpp"

using namespace anx;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an anx::Error");
  return Errc::InvalidInput;
}

std::optional<std::size_t> line_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.line();
  }
  return std::nullopt;
}

Manifest parse(const std::string& text) {
  std::istringstream in(text);
  return parse_manifest(in);
}

// Two-class manifest: n0 entries with score 2, n1 with score 12.
Manifest synthetic(std::size_t n0, std::size_t n1) {
  Manifest m;
  for (std::size_t i = 0; i < n0 + n1; ++i) m.push_back({"r" + std::to_string(i), std::nullopt, i < n0 ? 2 : 12, std::nullopt});
  return m;
}

// Independent largest-remainder allocation (ties to the earlier split).
std::array<std::size_t, 3> largest_remainder(std::size_t n, std::array<double, 3> r) {
  std::array<std::size_t, 3> out{};
  std::array<double, 3> rem{};
  std::size_t used = 0;
  for (int k = 0; k < 3; ++k) {
    const double q = static_cast<double>(n) * r[k];
    out[k] = static_cast<std::size_t>(std::floor(q));
    rem[k] = q - std::floor(q);
    used += out[k];
  }
  while (used < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k) {
      if (rem[k] > rem[best]) best = k;
    }
    ++out[best];
    rem[best] = -1.0;
    ++used;
  }
  return out;
}

std::map<std::pair<int, Split>, std::size_t> tally(const Manifest& m) {
  std::map<std::pair<int, Split>, std::size_t> t;
  for (const auto& e : m) ++t[{gad7_label(e.gad7), *e.split}];
  return t;
}

}  // namespace

TEST_CASE("manifest parsing") {
  const auto m = parse(
      "{\"id\": \"a\", \"gad7\": 0}\n"
      "\n"
      "{\"id\": \"b\", \"gad7\": 21, \"audio_path\": \"b.wav\", \"split\": \"valid\"}\n"
      "{\"id\": \"c\", \"gad7\": 7, \"split\": \"test\"}\n");
  REQUIRE(m.size() == 3);
  CHECK(m[0].id == "a");
  CHECK(!m[0].audio_path);
  CHECK(!m[0].split);
  CHECK(m[1].audio_path == "b.wav");
  CHECK(m[1].split == Split::valid);
  CHECK(m[2].gad7 == 7);

  CHECK(code_of([] { parse("{\"id\": \"a\", \"gad7\": 22}\n"); }) == Errc::ScoreOutOfRange);
  CHECK(code_of([] { parse("{\"id\": \"a\", \"gad7\": -1}\n"); }) == Errc::ScoreOutOfRange);
  CHECK(code_of([] { parse("{\"id\": \"a\", \"gad7\": 1}\n{\"id\": \"a\", \"gad7\": 2}\n"); }) == Errc::DuplicateId);
  CHECK(line_of([] { parse("{\"id\": \"a\", \"gad7\": 1}\n{\"id\": \"a\", \"gad7\": 2}\n"); }) == 2u);
  CHECK(code_of([] { parse("{\"id\": \"a\", \"gad7\": 1}\nnot json\n"); }) == Errc::MalformedLine);
  CHECK(line_of([] { parse("{\"id\": \"a\", \"gad7\": 1}\n\nnot json\n"); }) == 3u);
  CHECK(code_of([] { parse("{\"id\": \"a\"}\n"); }) == Errc::MalformedLine);
  CHECK(code_of([] { parse("{\"id\": \"a\", \"gad7\": 3, \"split\": \"dev\"}\n"); }) == Errc::MalformedLine);
}

TEST_CASE("manifest write and parse round trip") {
  auto m = synthetic(3, 2);
  m[1].audio_path = "x/y.wav";
  m = stratified_split(m, {0.6, 0.2, 0.2}, 3);
  std::stringstream ss;
  write_manifest(ss, m);
  CHECK(parse_manifest(ss) == m);
}

TEST_CASE("GAD-7 buckets, binarization and weights") {
  CHECK(gad7_bucket(0) == AnxietyLevel::none);
  CHECK(gad7_bucket(4) == AnxietyLevel::none);
  CHECK(gad7_bucket(5) == AnxietyLevel::mild);
  CHECK(gad7_bucket(9) == AnxietyLevel::mild);
  CHECK(gad7_bucket(10) == AnxietyLevel::moderate);
  CHECK(gad7_bucket(14) == AnxietyLevel::moderate);
  CHECK(gad7_bucket(15) == AnxietyLevel::severe);
  CHECK(gad7_bucket(21) == AnxietyLevel::severe);
  CHECK(code_of([] { gad7_bucket(22); }) == Errc::ScoreOutOfRange);

  CHECK(binarize(AnxietyLevel::none) == 0);
  CHECK(binarize(AnxietyLevel::mild) == 1);
  CHECK(binarize(AnxietyLevel::moderate) == 1);
  CHECK(binarize(AnxietyLevel::severe) == 1);

  CHECK(sample_weight(0) == 1.0 / 22.0);
  CHECK(sample_weight(10) == 0.5);
  CHECK(sample_weight(21) == 1.0);
  CHECK(code_of([] { sample_weight(-1); }) == Errc::ScoreOutOfRange);

  for (int s = 0; s <= kGad7Max; ++s) {
    CHECK(sample_weight(s) == static_cast<double>(s + 1) / 22.0);
    CHECK(sample_weight(s) > 0.0);
    CHECK(sample_weight(s) <= 1.0);
    if (s > 0) {
      CHECK(sample_weight(s) > sample_weight(s - 1));
      CHECK(gad7_label(s) >= gad7_label(s - 1));
    }
  }
}

TEST_CASE("split counts for the 2257-item corpus shape") {
  const auto m = synthetic(1162, 1095);
  const std::array<double, 3> r{0.722, 0.128, 0.150};
  const auto c0 = largest_remainder(1162, r);
  const auto c1 = largest_remainder(1095, r);
  CHECK(c0 == std::array<std::size_t, 3>{839, 149, 174});
  CHECK(c1 == std::array<std::size_t, 3>{791, 140, 164});

  for (std::uint64_t seed : {0ull, 1ull, 77ull}) {
    const auto s = stratified_split(m, {}, seed);
    auto t = tally(s);
    for (int k = 0; k < 3; ++k) {
      const auto sp = static_cast<Split>(k);
      CHECK(t[{0, sp}] == c0[k]);
      CHECK(t[{1, sp}] == c1[k]);
    }
    const std::array<std::size_t, 3> table{1630, 288, 339};
    for (int k = 0; k < 3; ++k) {
      const auto total = static_cast<long>(c0[k] + c1[k]);
      CHECK(std::abs(total - static_cast<long>(table[k])) <= 2);
    }
  }
  CHECK(apportion(1162, {}) == c0);
}

TEST_CASE("split determinism and partition") {
  const auto m = synthetic(40, 23);
  const auto a = stratified_split(m, {}, 9);
  const auto b = stratified_split(m, {}, 9);
  CHECK(a == b);
  const auto c = stratified_split(m, {}, 10);
  CHECK(a != c);

  REQUIRE(a.size() == m.size());
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == m[i].id);  // order kept, only tags added
    CHECK(a[i].split.has_value());
    ids.insert(a[i].id);
  }
  CHECK(ids.size() == m.size());
}

TEST_CASE("single-class list of 10 splits 8/1/1") {
  const auto s = stratified_split(synthetic(10, 0), {0.8, 0.1, 0.1}, 4);
  const auto t = tally(s);
  CHECK(t.at({0, Split::train}) == 8);
  CHECK(t.at({0, Split::valid}) == 1);
  CHECK(t.at({0, Split::test}) == 1);
  CHECK(code_of([] { stratified_split(Manifest{}, {}, 1); }) == Errc::EmptyClass);
  CHECK(code_of([] { stratified_split(synthetic(3, 3), {0.5, 0.5, 0.5}, 1); }) == Errc::InvalidInput);
  CHECK(code_of([] { stratified_split(synthetic(3, 3), {1.0, 0.0, 0.0}, 1); }) == Errc::InvalidInput);
}

TEST_CASE("per-class allocation stays within one item of the ratios") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(1, 400);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    double a = u(rng), b = u(rng), c = u(rng);
    const double sum = a + b + c;
    const SplitRatios r{a / sum, b / sum, 1.0 - a / sum - b / sum};
    const std::size_t n0 = size(rng), n1 = size(rng);
    const auto t = tally(stratified_split(synthetic(n0, n1), r, trial));
    const std::array<double, 3> rr{r.train, r.valid, r.test};
    for (int cls = 0; cls < 2; ++cls) {
      const double n = static_cast<double>(cls == 0 ? n0 : n1);
      std::size_t total = 0;
      for (int k = 0; k < 3; ++k) {
        const auto it = t.find({cls, static_cast<Split>(k)});
        const std::size_t got = it == t.end() ? 0 : it->second;
        CHECK(std::abs(static_cast<double>(got) - n * rr[k]) < 1.0 + 1e-9);
        total += got;
      }
      CHECK(total == (cls == 0 ? n0 : n1));
    }
  }
}
