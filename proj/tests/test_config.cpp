#include <fstream>

#include "doctest.h"
#include "hypegt/config.hpp"
#include "hypegt/errors.hpp"

using namespace hypegt;

TEST_CASE("config parses keys, comments and whitespace") {
    KVConfig cfg = KVConfig::from_string(
        "# leading comment\n"
        "n = 300\n"
        "  p_in=0.1   # trailing comment\n"
        "\n"
        "name = sbm graph\n"
        "flag = true\n");

    CHECK(cfg.has("n"));
    CHECK(cfg.has("p_in"));
    CHECK_FALSE(cfg.has("missing"));
    CHECK(cfg.get_long("n", 0) == 300);
    CHECK(cfg.get_double("p_in", 0.0) == doctest::Approx(0.1));
    CHECK(cfg.get_string("name", "") == "sbm graph");
    CHECK(cfg.get_bool("flag", false));
    cfg.ensure_consumed();
}

TEST_CASE("config fallbacks apply only for absent keys") {
    KVConfig cfg = KVConfig::from_string("a = 2\n");
    CHECK(cfg.get_long("a", 7) == 2);
    CHECK(cfg.get_long("b", 7) == 7);
    CHECK(cfg.get_double("c", 1.5) == doctest::Approx(1.5));
    CHECK(cfg.get_string("d", "x") == "x");
    CHECK(cfg.get_bool("e", true));
    cfg.ensure_consumed();
}

TEST_CASE("config rejects malformed input") {
    CHECK_THROWS_AS(KVConfig::from_string("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(KVConfig::from_string("just words\n"), ConfigError);
    CHECK_THROWS_AS(KVConfig::from_string("= 3\n"), ConfigError);

    KVConfig cfg = KVConfig::from_string("x = notanumber\nb = maybe\n");
    CHECK_THROWS_AS(cfg.get_long("x", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_double("x", 0.0), ConfigError);
    CHECK_THROWS_AS(cfg.get_bool("b", false), ConfigError);
}

TEST_CASE("config tracks unread keys") {
    KVConfig cfg = KVConfig::from_string("a = 1\nunused = 2\n");
    CHECK(cfg.get_long("a", 0) == 1);
    CHECK_THROWS_AS(cfg.ensure_consumed(), ConfigError);
    CHECK(cfg.get_long("unused", 0) == 2);
    cfg.ensure_consumed();
}

TEST_CASE("config require_string reports missing keys") {
    KVConfig cfg = KVConfig::from_string("k = v\n");
    CHECK(cfg.require_string("k") == "v");
    CHECK_THROWS_AS(cfg.require_string("absent"), ConfigError);
}

TEST_CASE("config loads from file and rejects missing paths") {
    const std::string path = "/tmp/hypegt_test_config.txt";
    {
        std::ofstream f(path);
        f << "alpha = 0.25\n# comment\nbeta = 4\n";
    }
    KVConfig cfg = KVConfig::from_file(path);
    CHECK(cfg.get_double("alpha", 0.0) == doctest::Approx(0.25));
    CHECK(cfg.get_long("beta", 0) == 4);
    cfg.ensure_consumed();

    CHECK_THROWS_AS(KVConfig::from_file("/tmp/hypegt_no_such_config.txt"), IoError);
}

TEST_CASE("config keys lists stored entries") {
    KVConfig cfg = KVConfig::from_string("b = 2\na = 1\n");
    auto keys = cfg.keys();
    REQUIRE(keys.size() == 2);
    CHECK(keys[0] == "a");
    CHECK(keys[1] == "b");
    cfg.get_long("a", 0);
    cfg.get_long("b", 0);
}
