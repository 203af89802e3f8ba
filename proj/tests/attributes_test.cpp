#include <string>
#include <vector>

#include "doctest.h"

#include "attributes.hpp"
#include "error.hpp"
#include "test_util.hpp"

using namespace netate;
using testutil::TempDir;

TEST_SUITE("attributes") {

TEST_CASE("load_csv infers categorical vs real columns") {
  TempDir dir;
  const auto path = dir.file("attrs.csv");
  testutil::write_file(path,
                       "node_id,region,age\n"
                       "0,north,41\n"
                       "2,south,\n"
                       "1,north,12.5\n");
  const auto t = AttributeTable::load_csv(path, 4);
  REQUIRE(t.node_count() == 4);
  REQUIRE(t.has_column("region"));
  REQUIRE(t.has_column("age"));

  const auto& region = t.column("region");
  CHECK(region.kind == ColumnKind::categorical);
  CHECK(region.levels == std::vector<std::string>{"north", "south"});
  CHECK(region.codes[0] == 0);
  CHECK(region.codes[1] == 0);
  CHECK(region.codes[2] == 1);
  CHECK(region.missing[3] == 1);  // node 3 had no row

  const auto& age = t.column("age");
  CHECK(age.kind == ColumnKind::real);
  CHECK(age.values[0] == doctest::Approx(41.0));
  CHECK(age.values[1] == doctest::Approx(12.5));
  CHECK(age.missing[2] == 1);  // empty cell
}

TEST_CASE("a single non-numeric cell makes the whole column categorical") {
  TempDir dir;
  const auto path = dir.file("attrs.csv");
  testutil::write_file(path, "node_id,x\n0,1\n1,2\n2,two\n");
  const auto t = AttributeTable::load_csv(path, 3);
  CHECK(t.column("x").kind == ColumnKind::categorical);
  // lexicographic levels: "1" < "2" < "two"
  CHECK(t.column("x").levels == std::vector<std::string>{"1", "2", "two"});
}

TEST_CASE("load_csv validates structure") {
  TempDir dir;

  testutil::write_file(dir.file("dup.csv"), "node_id,x\n0,a\n0,b\n");
  CHECK_THROWS_AS(AttributeTable::load_csv(dir.file("dup.csv"), 2), DataError);

  testutil::write_file(dir.file("range.csv"), "node_id,x\n9,a\n");
  CHECK_THROWS_AS(AttributeTable::load_csv(dir.file("range.csv"), 2), DataError);

  testutil::write_file(dir.file("nohdr.csv"), "");
  CHECK_THROWS_AS(AttributeTable::load_csv(dir.file("nohdr.csv"), 2), DataError);

  testutil::write_file(dir.file("badfirst.csv"), "id,x\n0,a\n");
  CHECK_THROWS_AS(AttributeTable::load_csv(dir.file("badfirst.csv"), 2), DataError);

  testutil::write_file(dir.file("ragged.csv"), "node_id,x\n0,a,extra\n");
  CHECK_THROWS_AS(AttributeTable::load_csv(dir.file("ragged.csv"), 2), DataError);
}

TEST_CASE("load_csv with an external id map skips unmapped rows") {
  TempDir dir;
  const auto path = dir.file("attrs.csv");
  testutil::write_file(path,
                       "node_id,block\n"
                       "100,a\n"
                       "200,b\n"
                       "999,c\n");
  const std::vector<std::uint64_t> external_ids = {100, 200};  // 999 not in the graph
  std::uint64_t skipped = 0;
  const auto t = AttributeTable::load_csv(path, external_ids, &skipped);
  CHECK(t.node_count() == 2);
  CHECK(skipped == 1);
  CHECK(t.column("block").codes[0] == 0);
  CHECK(t.column("block").codes[1] == 1);
  // level "c" never materializes: the row was skipped before inference
  CHECK(t.column("block").level_count() == 2);
}

TEST_CASE("save_csv round trips values") {
  AttributeTable t(3);
  t.add_categorical("grp", {1, 0, 1}, {"a", "b"});
  t.add_real("score", {0.5, -1.25, 3.0});

  TempDir dir;
  t.save_csv(dir.file("out.csv"));
  const auto back = AttributeTable::load_csv(dir.file("out.csv"), 3);
  CHECK(back.column("grp").kind == ColumnKind::categorical);
  CHECK(back.column("grp").codes == std::vector<std::uint32_t>{1, 0, 1});
  CHECK(back.column("score").values[1] == doctest::Approx(-1.25));
}

TEST_CASE("column accessor reports missing columns") {
  AttributeTable t(1);
  CHECK_THROWS_AS(t.column("nope"), DataError);
  CHECK_FALSE(t.has_column("nope"));
}

TEST_CASE("add_categorical validates codes against levels") {
  AttributeTable t(2);
  CHECK_THROWS_AS(t.add_categorical("bad", {0, 5}, {"only"}), InvalidArgument);
  CHECK_THROWS_AS(t.add_real("short", {1.0}), InvalidArgument);
}

TEST_CASE("discretize_quantiles bins a real column and compacts empties") {
  Column c;
  c.name = "v";
  c.kind = ColumnKind::real;
  c.values = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  c.missing.assign(6, 0);

  const Column binned = discretize_quantiles(c, 3);
  CHECK(binned.kind == ColumnKind::categorical);
  CHECK(binned.level_count() == 3);
  // thresholds at order statistics 2 and 4 -> bins {0,1},{2,3},{4,5}
  CHECK(binned.codes == std::vector<std::uint32_t>{0, 0, 1, 1, 2, 2});

  // constant column: every value lands in one bin, the rest compact away
  Column flat = c;
  flat.values.assign(6, 7.0);
  const Column one = discretize_quantiles(flat, 4);
  CHECK(one.level_count() == 1);
  CHECK(one.codes == std::vector<std::uint32_t>(6, 0));
}

TEST_CASE("categorical_view passes categoricals through and bins reals") {
  AttributeTable t(4);
  t.add_categorical("grp", {0, 1, 0, 1}, {"x", "y"});
  t.add_real("v", {10.0, 20.0, 30.0, 40.0});

  CHECK(categorical_view(t, "grp", 3).codes == std::vector<std::uint32_t>{0, 1, 0, 1});
  const auto binned = categorical_view(t, "v", 2);
  CHECK(binned.level_count() == 2);
  CHECK(binned.codes == std::vector<std::uint32_t>{0, 0, 1, 1});
}

}  // TEST_SUITE
