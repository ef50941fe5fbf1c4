#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "adma/dataset.hpp"

using Catch::Approx;
using adma::CsvOptions;
using adma::Dataset;

namespace {

// Writes content to a unique temp file, removes it on scope exit.
class TempCsv {
 public:
  explicit TempCsv(const std::string& content) {
    static int counter = 0;
    path_ = (std::filesystem::temp_directory_path() /
             ("adma_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".csv"))
                .string();
    std::ofstream out(path_, std::ios::binary);
    out << content;
  }
  ~TempCsv() { std::remove(path_.c_str()); }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace

TEST_CASE("load_csv basic parse with the response mid-row") {
  TempCsv f(
      "date,x1,y,x2\n"
      "2001Q1,0.5,1.0,-2.0\n"
      "2001Q2,0.25,2.0,4.0\n"
      "2001Q3,-1.5,3.0,0.0\n");
  Dataset ds = adma::load_csv(f.path());
  REQUIRE(ds.time == (std::vector<std::string>{"2001Q1", "2001Q2", "2001Q3"}));
  REQUIRE(ds.response_name == "y");
  REQUIRE(ds.predictor_names == (std::vector<std::string>{"x1", "x2"}));
  REQUIRE(ds.y.size() == 3);
  REQUIRE(ds.y[1] == 2.0);
  REQUIRE(ds.X.rows() == 3);
  REQUIRE(ds.X.cols() == 2);
  REQUIRE(ds.X(0, 0) == 0.5);
  REQUIRE(ds.X(0, 1) == -2.0);
  REQUIRE(ds.X(2, 1) == 0.0);
}

TEST_CASE("load_csv custom response name") {
  TempCsv f(
      "t,infl,gdp\n"
      "1,0.1,2.0\n"
      "2,0.2,2.1\n");
  CsvOptions opts;
  opts.response = "gdp";
  Dataset ds = adma::load_csv(f.path(), opts);
  REQUIRE(ds.response_name == "gdp");
  REQUIRE(ds.predictor_names == std::vector<std::string>{"infl"});
  REQUIRE(ds.y[0] == 2.0);
  REQUIRE(ds.X(1, 0) == Approx(0.2).margin(1e-15));
}

TEST_CASE("lagging pairs each response with the previous row's predictors") {
  TempCsv f(
      "t,y,x1\n"
      "1,10.0,0.1\n"
      "2,20.0,0.2\n"
      "3,30.0,0.3\n"
      "4,40.0,0.4\n");
  CsvOptions opts;
  opts.lag_predictors = true;
  Dataset ds = adma::load_csv(f.path(), opts);
  REQUIRE(ds.time == (std::vector<std::string>{"2", "3", "4"}));
  REQUIRE(ds.y.size() == 3);
  REQUIRE(ds.y[0] == 20.0);
  REQUIRE(ds.X(0, 0) == Approx(0.1).margin(1e-15));  // x observed at t=1 explains y at t=2
  REQUIRE(ds.y[2] == 40.0);
  REQUIRE(ds.X(2, 0) == Approx(0.3).margin(1e-15));

  TempCsv tiny("t,y,x1\n1,1.0,2.0\n");
  REQUIRE_THROWS_AS(adma::load_csv(tiny.path(), opts), adma::validation_error);
}

TEST_CASE("comments and blank lines are skipped anywhere") {
  TempCsv f(
      "# generated: kind=static seed=7\n"
      "\n"
      "t,y,x1\n"
      "# mid-file note\n"
      "1,1.0,0.5\n"
      "\n"
      "2,2.0,0.6\n");
  Dataset ds = adma::load_csv(f.path());
  REQUIRE(ds.y.size() == 2);
  REQUIRE(ds.y[1] == 2.0);
}

TEST_CASE("bad cells report the row and column") {
  TempCsv f(
      "t,y,x1\n"
      "1,1.0,0.5\n"
      "2,oops,0.6\n");
  try {
    adma::load_csv(f.path());
    FAIL("expected a validation error");
  } catch (const adma::validation_error& e) {
    std::string msg = e.what();
    REQUIRE(msg.find("row 2") != std::string::npos);
    REQUIRE(msg.find("'y'") != std::string::npos);
    REQUIRE(msg.find("oops") != std::string::npos);
  }

  TempCsv inf_cell("t,y,x1\n1,inf,0.5\n");
  REQUIRE_THROWS_AS(adma::load_csv(inf_cell.path()), adma::validation_error);
  TempCsv empty_cell("t,y,x1\n1,,0.5\n");
  REQUIRE_THROWS_AS(adma::load_csv(empty_cell.path()), adma::validation_error);
}

TEST_CASE("structural validation") {
  SECTION("missing file") {
    REQUIRE_THROWS_AS(adma::load_csv("/nonexistent/nowhere.csv"), adma::validation_error);
  }
  SECTION("missing response column") {
    TempCsv f("t,a,b\n1,1.0,2.0\n");
    REQUIRE_THROWS_AS(adma::load_csv(f.path()), adma::validation_error);
  }
  SECTION("duplicate response column") {
    TempCsv f("t,y,y\n1,1.0,2.0\n");
    REQUIRE_THROWS_AS(adma::load_csv(f.path()), adma::validation_error);
  }
  SECTION("ragged row") {
    TempCsv f("t,y,x1\n1,1.0,0.5\n2,2.0\n");
    REQUIRE_THROWS_AS(adma::load_csv(f.path()), adma::validation_error);
  }
  SECTION("duplicate time label") {
    TempCsv f("t,y,x1\n1,1.0,0.5\n1,2.0,0.6\n");
    REQUIRE_THROWS_AS(adma::load_csv(f.path()), adma::validation_error);
  }
  SECTION("header only") {
    TempCsv f("t,y,x1\n");
    REQUIRE_THROWS_AS(adma::load_csv(f.path()), adma::validation_error);
  }
  SECTION("no predictor or response columns") {
    TempCsv f("t\n1\n");
    REQUIRE_THROWS_AS(adma::load_csv(f.path()), adma::validation_error);
  }
  SECTION("empty file") {
    TempCsv f("");
    REQUIRE_THROWS_AS(adma::load_csv(f.path()), adma::validation_error);
  }
}

TEST_CASE("numeric time labels must increase strictly") {
  TempCsv out_of_order("t,y,x1\n1,1.0,0.5\n3,2.0,0.6\n2,3.0,0.7\n");
  REQUIRE_THROWS_AS(adma::load_csv(out_of_order.path()), adma::validation_error);

  TempCsv repeated_value("t,y,x1\n1.0,1.0,0.5\n1.00,2.0,0.6\n");
  // '1.0' and '1.00' are distinct strings but equal numbers
  REQUIRE_THROWS_AS(adma::load_csv(repeated_value.path()), adma::validation_error);

  // string labels carry no order; file order is kept
  TempCsv strings("t,y,x1\nQ4,1.0,0.5\nQ1,2.0,0.6\n");
  Dataset ds = adma::load_csv(strings.path());
  REQUIRE(ds.time == (std::vector<std::string>{"Q4", "Q1"}));
}

TEST_CASE("windows line endings are tolerated") {
  TempCsv f("t,y,x1\r\n1,1.0,0.5\r\n2,2.0,0.6\r\n");
  Dataset ds = adma::load_csv(f.path());
  REQUIRE(ds.y.size() == 2);
  REQUIRE(ds.X(1, 0) == Approx(0.6).margin(1e-15));
}
