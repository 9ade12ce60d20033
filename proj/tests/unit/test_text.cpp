#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "blockprnu/parallel.hpp"
#include "blockprnu/text.hpp"
#include "support/oracles.hpp"

using namespace blockprnu;
using namespace blockprnu::testing;

TEST_SUITE("text") {

TEST_CASE("doubles print shortest and parse back exactly") {
    Rng rng(1);
    for (int t = 0; t < 2000; ++t) {
        const double v = std::ldexp(uniform(rng, -1.0, 1.0), uniform_int(rng, -60, 60));
        double back = 0.0;
        REQUIRE(parse_double(format_double(v), back));
        CHECK(back == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(60.0) == "60");
    CHECK(format_significant(123456.0, 3) == "1.23e+05");
    CHECK(format_significant(0.012345, 3) == "0.0123");
}

TEST_CASE("numeric parsing is strict") {
    double d = 0.0;
    long long i = 0;
    CHECK(parse_double(" 2.5 ", d));
    CHECK(d == 2.5);
    CHECK_FALSE(parse_double("2.5x", d));
    CHECK_FALSE(parse_double("", d));
    CHECK(parse_int("-42", i));
    CHECK(i == -42);
    CHECK_FALSE(parse_int("4.0", i));
    CHECK_FALSE(parse_int("", i));
}

TEST_CASE("splitting and lines") {
    const auto parts = split("a,,b", ',');
    REQUIRE(parts.size() == 3);
    CHECK(parts[1].empty());
    CHECK(trim("  x y\t") == "x y");
    const auto ls = lines("one\r\n\ntwo\nthree");
    REQUIRE(ls.size() == 3);
    CHECK(ls[0] == "one");
    CHECK(ls[2] == "three");
}

TEST_CASE("parallel_for runs each index once and rethrows") {
    for (const int workers : {1, 2, 5}) {
        std::vector<std::atomic<int>> hits(97);
        parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i].fetch_add(1); });
        for (const auto& h : hits) CHECK(h.load() == 1);
        CHECK_THROWS_AS(parallel_for(10, workers,
                                     [](std::size_t i) {
                                         if (i == 7) throw std::runtime_error("boom");
                                     }),
                        std::runtime_error);
    }
    CHECK(default_worker_count() >= 1);
}

}  // TEST_SUITE
