#include <catch2/catch_amalgamated.hpp>

#include <csb/config.hpp>
#include <csb/io.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

using namespace csb;

namespace {

const std::string kMinimalConfig = R"({
  "model": "identity",
  "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
  "grid": {"start": 0, "stop": 1, "step": 1}
})";

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::temp_directory_path() / "csb-io-tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string scratch_file(const std::string& name, const std::string& content) {
    const auto path = scratch_dir() / name;
    io::write_text_file(path.string(), content);
    return path.string();
}

}  // namespace

TEST_CASE("seventeen digits reproduce every double bit for bit") {
    for (double v : {0.1, 1.0 / 3.0, 1e300, 5e-324, 0.0, -2.5, 6.02214076e23,
                     0.30000000000000004}) {
        const std::string s = fmt17(v);
        const double back = std::strtod(s.c_str(), nullptr);
        CHECK(back == v);
    }
    CHECK(fmt17(1.0) == "1");
    CHECK(fmt17(-0.5) == "-0.5");
}

TEST_CASE("json strings escape the characters that break parsers") {
    CHECK(io::json_escape("plain") == "plain");
    CHECK(io::json_escape("a\"b") == "a\\\"b");
    CHECK(io::json_escape("a\\b") == "a\\\\b");
    CHECK(io::json_escape("a\nb\tc") == "a\\nb\\tc");
    CHECK(io::json_escape(std::string("a\x01") + "b") == "a\\u0001b");
}

TEST_CASE("json builders keep insertion order and format doubles themselves") {
    io::JsonObj obj;
    obj.add("b", 2).add("a", 0.5).add("name", "x\"y");
    CHECK(obj.str() == R"({"b":2,"a":0.5,"name":"x\"y"})");

    io::JsonArr arr;
    arr.add(1.0).add(std::string("s")).raw("null");
    CHECK(arr.str() == R"([1,"s",null])");

    io::JsonObj nested;
    nested.raw("inner", arr.str());
    CHECK(nested.str() == R"({"inner":[1,"s",null]})");
}

TEST_CASE("csv writer closes rows when the column count is reached") {
    io::CsvWriter w({"a", "b", "c"});
    w.cell(1.0).cell(std::string("x")).cell(true);
    w.cell(0.25).cell(std::string("y")).cell(false);
    CHECK(w.str() == "a,b,c\n1,x,true\n0.25,y,false\n");
}

TEST_CASE("time series files round-trip through seventeen-digit cells") {
    io::CsvWriter w({"time", "cases"});
    const std::vector<double> times{0.0, 1.0, 2.0};
    const std::vector<double> cases{100.0, 1.0 / 3.0, 0.1};
    for (std::size_t i = 0; i < times.size(); ++i) w.cell(times[i]).cell(cases[i]);
    const std::string path = scratch_file("series.csv", w.str());

    auto [t, v] = io::read_time_series_csv(path);
    CHECK(t == times);
    CHECK(v == cases);
}

TEST_CASE("time series reader names the offending line") {
    const std::string path = scratch_file("bad.csv", "time,cases\n1.0;2.0\n");
    CHECK_THROWS_WITH(io::read_time_series_csv(path),
                      Catch::Matchers::ContainsSubstring(":2:"));
    const std::string path2 = scratch_file("bad2.csv", "time,cases\nx,2.0\n");
    CHECK_THROWS_WITH(io::read_time_series_csv(path2),
                      Catch::Matchers::ContainsSubstring("bad time value"));
    CHECK_THROWS_AS(io::read_time_series_csv((scratch_dir() / "missing.csv").string()),
                    std::runtime_error);
    const std::string path3 = scratch_file("empty.csv", "");
    CHECK_THROWS_AS(io::read_time_series_csv(path3), std::runtime_error);
}

TEST_CASE("a second run cannot grab a locked output directory") {
    const auto dir = scratch_dir() / "locked";
    std::filesystem::create_directories(dir);
    std::filesystem::remove(dir / ".lock");  // stale lock from an aborted run
    {
        io::DirLock lock(dir.string());
        CHECK_THROWS_WITH(io::DirLock(dir.string()),
                          Catch::Matchers::ContainsSubstring("locked by another run"));
    }
    // released on destruction: locking again succeeds
    io::DirLock again(dir.string());
}

TEST_CASE("minimal config fills every default") {
    ProblemConfig cfg = parse_config(kMinimalConfig, "test");
    CHECK(cfg.model == "identity");
    CHECK(cfg.lambda == 1.3);
    CHECK(cfg.loss.alpha == 2.0);
    CHECK(cfg.shrink.n == 1000);
    CHECK(cfg.shrink.imax == 500);
    CHECK(cfg.sa.n == 3000);
    CHECK(cfg.ua.n == 1000);
    CHECK(cfg.fit.n_starts == 100);
    CHECK(cfg.grid_points == std::vector<double>{0.0, 1.0});
    CHECK(cfg.factors.size() == 1);
    CHECK(cfg.factors[0].nominal == 1.0);
    CHECK(nominal_vector(cfg) == FactorVector{1.0});
}

TEST_CASE("lambda requires explicit units") {
    ProblemConfig cfg = parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "lambda": {"percent": 30}
    })", "test");
    CHECK(cfg.lambda == 1.3);

    cfg = parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "lambda": {"multiplier": 1.25}
    })", "test");
    CHECK(cfg.lambda == 1.25);

    CHECK_THROWS_AS(parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "lambda": 1.3
    })", "test"), ConfigError);
}

TEST_CASE("config parser names the problem it found") {
    // unknown top-level key
    CHECK_THROWS_WITH(parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "typo_key": 1
    })", "test"), Catch::Matchers::ContainsSubstring("typo_key"));

    // nominal outside its range
    CHECK_THROWS_WITH(parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 5}],
      "grid": {"start": 0, "stop": 1, "step": 1}
    })", "test"), Catch::Matchers::ContainsSubstring("outside range"));

    // both data sources at once
    CHECK_THROWS_WITH(parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "data": {"file": "x.csv", "synthetic": {"noise": 0}}
    })", "test"), Catch::Matchers::ContainsSubstring("exactly one"));

    // wrong factor count for the model
    CHECK_THROWS_WITH(parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1},
                  {"name": "x2", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 1, "step": 1}
    })", "test"), Catch::Matchers::ContainsSubstring("takes 1 factors"));

    // wrong factor name for the model
    CHECK_THROWS_WITH(parse_config(R"({
      "model": "identity",
      "factors": [{"name": "zz", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 1, "step": 1}
    })", "test"), Catch::Matchers::ContainsSubstring("must be named 'x1'"));

    // malformed JSON reports the line
    CHECK_THROWS_WITH(parse_config("{\n  \"model\": oops\n}", "test"),
                      Catch::Matchers::ContainsSubstring("line 2"));

    // box object missing a declared factor
    CHECK_THROWS_WITH(parse_config(R"({
      "model": "additive",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1},
                  {"name": "x2", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "sa": {"box": {"x1": [0, 1]}}
    })", "test"), Catch::Matchers::ContainsSubstring("x2"));
}

TEST_CASE("a missing nominal only bites the commands that need one") {
    ProblemConfig cfg = parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2]}],
      "grid": {"start": 0, "stop": 1, "step": 1}
    })", "test");
    CHECK_THROWS_WITH(nominal_vector(cfg), Catch::Matchers::ContainsSubstring("x1"));
}

TEST_CASE("grid accepts either explicit points or start stop step") {
    ProblemConfig a = parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 3, "step": 1}
    })", "test");
    ProblemConfig b = parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
      "grid": {"points": [0, 1, 2, 3]}
    })", "test");
    CHECK(a.grid_points == b.grid_points);

    CHECK_THROWS_AS(parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
      "grid": {"points": [0, 2, 1]}
    })", "test"), ConfigError);
}

TEST_CASE("serialized configs parse back to the same serialization") {
    ProblemConfig cfg = parse_config(kMinimalConfig, "test");
    resolve_seeds(cfg);
    const std::string s1 = serialize_config(cfg);
    ProblemConfig back = parse_config(s1, "replay");
    const std::string s2 = serialize_config(back);
    CHECK(s1 == s2);
    CHECK(config_hash(cfg) == config_hash(back));
}

TEST_CASE("manifests replay through the embedded config") {
    ProblemConfig direct = parse_config(kMinimalConfig, "test");
    resolve_seeds(direct);
    const std::string manifest = io::JsonObj()
                                     .add("command", "csb")
                                     .raw("config", serialize_config(direct))
                                     .str();
    ProblemConfig replayed = parse_config(manifest, "manifest");
    CHECK(serialize_config(replayed) == serialize_config(direct));
}

TEST_CASE("config hashes notice any change") {
    ProblemConfig a = parse_config(kMinimalConfig, "test");
    ProblemConfig b = a;
    b.lambda = 1.4;
    CHECK(config_hash(a).size() == 16);
    CHECK(config_hash(a) == config_hash(parse_config(kMinimalConfig, "again")));
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("the root seed pins every block seed deterministically") {
    ProblemConfig a = parse_config(kMinimalConfig, "test");
    a.seed = 42;
    resolve_seeds(a);
    ProblemConfig b = parse_config(kMinimalConfig, "test");
    b.seed = 42;
    resolve_seeds(b);
    REQUIRE(a.data.seed.has_value());
    CHECK(a.data.seed == b.data.seed);
    CHECK(a.fit.seed == b.fit.seed);
    CHECK(a.sa.seed == b.sa.seed);
    CHECK(a.ua.seed == b.ua.seed);
    CHECK(a.shrink.seed == b.shrink.seed);
    // distinct blocks draw from distinct streams
    CHECK(*a.data.seed != *a.fit.seed);
    CHECK(*a.sa.seed != *a.ua.seed);

    // an explicit block seed survives resolution
    ProblemConfig c = parse_config(R"({
      "model": "identity",
      "factors": [{"name": "x1", "range": [0, 2], "nominal": 1}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "shrink": {"seed": 99}
    })", "test");
    resolve_seeds(c);
    CHECK(c.shrink.seed == 99);
}

TEST_CASE("analysis boxes come from ranges, literals, or an emitted csv") {
    ProblemConfig cfg = parse_config(R"({
      "model": "additive",
      "factors": [{"name": "x1", "range": [0, 3], "nominal": 1},
                  {"name": "x2", "range": [-2, 2], "nominal": 0}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "sa": {"box": {"x1": [0.5, 1.5], "x2": [-1, 1]}}
    })", "test");

    Orthotope ranges = box_for(cfg.ua.box, cfg);  // ua defaulted to "ranges"
    CHECK(ranges.intervals[0] == Interval(0.0, 3.0));
    CHECK(ranges.intervals[1] == Interval(-2.0, 2.0));

    Orthotope literal = box_for(cfg.sa.box, cfg);
    CHECK(literal.intervals[0] == Interval(0.5, 1.5));
    CHECK(literal.intervals[1] == Interval(-1.0, 1.0));

    // rows may come in any order; factors are matched by name
    const std::string path = scratch_file(
        "box.csv", "factor,lower,upper,width\nx2,-0.5,0.5,1\nx1,0.25,2.75,2.5\n");
    ProblemConfig from_csv = parse_config(R"({
      "model": "additive",
      "factors": [{"name": "x1", "range": [0, 3], "nominal": 1},
                  {"name": "x2", "range": [-2, 2], "nominal": 0}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "sa": {"box": {"from_csv": ")" + path + R"("}}
    })", "test");
    Orthotope carved = box_for(from_csv.sa.box, from_csv);
    CHECK(carved.intervals[0] == Interval(0.25, 2.75));
    CHECK(carved.intervals[1] == Interval(-0.5, 0.5));

    CHECK_THROWS_WITH(parse_config(R"({
      "model": "additive",
      "factors": [{"name": "x1", "range": [0, 3], "nominal": 1},
                  {"name": "x2", "range": [-2, 2], "nominal": 0}],
      "grid": {"start": 0, "stop": 1, "step": 1},
      "sa": {"box": {"from_csv": "/nonexistent/x.csv"}}
    })", "test"), Catch::Matchers::ContainsSubstring("cannot open"));
}
