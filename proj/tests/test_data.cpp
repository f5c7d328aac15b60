#include <catch2/catch.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "drobust/data.hpp"

using namespace drobust;

TEST_CASE("libsvm parsing densifies 1-based sparse indices", "[data]") {
  std::stringstream in("1 1:0.5 3:2.0\n0 2:1.0\n");
  const Dataset ds = load_libsvm(in);
  REQUIRE(ds.size() == 2);
  REQUIRE(ds.dim == 3);
  CHECK(ds.labels[0] == 1);
  CHECK(ds.labels[1] == 0);
  CHECK(ds.features[0] == 0.5);
  CHECK(ds.features[1] == 0.0);
  CHECK(ds.features[2] == 2.0);
  CHECK(ds.features[3] == 0.0);
  CHECK(ds.features[4] == 1.0);
  CHECK(ds.num_classes == 2);
}

TEST_CASE("libsvm negative labels remap ascending", "[data]") {
  std::stringstream in("-1 1:1.0\n+1 1:2.0\n-1 1:3.0\n");
  const Dataset ds = load_libsvm(in);
  CHECK(ds.labels == std::vector<int>{0, 1, 0});
  CHECK(ds.num_classes == 2);
}

TEST_CASE("libsvm parse errors carry line numbers", "[data]") {
  std::stringstream empty("");
  CHECK_THROWS_AS(load_libsvm(empty), ParseError);

  std::stringstream junk("1 1:0.5\nfoo 1:1\n");
  try {
    load_libsvm(junk);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 2);
  }

  std::stringstream noval("1 1:\n");
  CHECK_THROWS_AS(load_libsvm(noval), ParseError);
}

TEST_CASE("csv loading with group and metadata columns", "[data]") {
  std::stringstream in(
      "label,group,site,x0,x1\n"
      "0,0,a,1.5,2.5\n"
      "1,1,b,0.5,-1.0\n"
      "0,0,a,2.0,0.0\n");
  const Dataset ds = load_csv(in);
  REQUIRE(ds.size() == 3);
  CHECK(ds.dim == 2);
  CHECK(ds.num_classes == 2);
  REQUIRE(ds.has_groups());
  CHECK(ds.groups == std::vector<int>{0, 1, 0});
  CHECK(ds.num_groups == 2);
  REQUIRE(ds.metadata_names.size() == 2);  // site + group
  CHECK(ds.metadata_names[0] == "site");

  const Dataset by_site =
      apply_grouping(ds, GroupingSpec::parse("by_column:site"));
  CHECK(by_site.groups == std::vector<int>{0, 1, 0});
}

TEST_CASE("csv errors", "[data]") {
  std::stringstream no_label("a,b\n1,2\n");
  CHECK_THROWS_AS(load_csv(no_label), ParseError);

  std::stringstream bad_feature("label,x0\n0,1.5\n1,oops\n");
  try {
    load_csv(bad_feature);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 3);
  }

  std::stringstream empty("label,x0\n");
  CHECK_THROWS_AS(load_csv(empty), ParseError);
}

TEST_CASE("csv round-trip is exact", "[data]") {
  Dataset ds;
  ds.dim = 2;
  ds.num_classes = 3;
  ds.num_groups = 2;
  ds.labels = {0, 2, 1, 2};
  ds.groups = {1, 0, 1, 1};
  ds.features = {0.1, -1.0 / 3.0, std::sqrt(2.0), 4e-17, 12345.678, 0.0,
                 -9.25, 1e300};
  ds.feature_names = {"x0", "x1"};

  std::stringstream io;
  write_csv(ds, io);
  const Dataset back = load_csv(io);
  CHECK(back.labels == ds.labels);
  CHECK(back.groups == ds.groups);
  CHECK(back.features == ds.features);
  CHECK(back.num_classes == ds.num_classes);
  CHECK(back.num_groups == ds.num_groups);
}

TEST_CASE("groupings preserve everything but the group ids", "[data]") {
  Dataset ds;
  ds.dim = 1;
  ds.num_classes = 3;
  ds.labels = {2, 0, 1, 2, 0};
  ds.features = {1, 2, 3, 4, 5};

  const Dataset by_class = apply_grouping(ds, {GroupingMode::ByClass, ""});
  CHECK(by_class.groups == ds.labels);
  CHECK(by_class.num_groups == 3);
  CHECK(by_class.features == ds.features);
  CHECK(by_class.labels == ds.labels);

  const Dataset singleton = apply_grouping(ds, {GroupingMode::Singleton, ""});
  CHECK(singleton.groups == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(singleton.num_groups == 5);

  CHECK_THROWS_AS(apply_grouping(ds, {GroupingMode::ByColumn, "site"}),
                  ConfigError);
  CHECK_THROWS_AS(apply_grouping(ds, {GroupingMode::BySubcategoryLabels, ""}),
                  ConfigError);
}

TEST_CASE("subcategory task ranks classes by count", "[data]") {
  // counts: A=4, B=3, C=2, D=1 -> positives {A, C}, negatives {B, D}
  Dataset ds;
  ds.dim = 1;
  ds.num_classes = 4;
  ds.labels = {0, 0, 0, 0, 1, 1, 1, 2, 2, 3};
  ds.features.assign(10, 0.0);

  const Dataset task = make_subcategory_task(ds);
  CHECK(task.num_classes == 2);
  CHECK(task.num_groups == 4);
  CHECK(task.groups == ds.labels);
  const std::vector<int> expected{0, 0, 0, 0, 1, 1, 1, 0, 0, 1};
  CHECK(task.labels == expected);

  int positives = 0;
  for (int y : task.labels) positives += y == 0 ? 1 : 0;
  CHECK(positives == 6);  // 4 + 2
}

TEST_CASE("subcategory task: K = 2 and count ties", "[data]") {
  Dataset two;
  two.dim = 1;
  two.num_classes = 2;
  two.labels = {0, 0, 1};
  two.features.assign(3, 0.0);
  const Dataset task = make_subcategory_task(two);
  CHECK(task.num_classes == 2);
  CHECK(task.num_groups == 2);
  CHECK(task.labels == std::vector<int>{0, 0, 1});

  Dataset tie;
  tie.dim = 1;
  tie.num_classes = 2;
  tie.labels = {0, 1};
  tie.features.assign(2, 0.0);
  // equal counts: class 0 ranks first by the id tie-break, so it is positive
  const Dataset tied = make_subcategory_task(tie);
  CHECK(tied.labels == std::vector<int>{0, 1});

  Dataset single;
  single.dim = 1;
  single.num_classes = 1;
  single.labels = {0};
  single.features.assign(1, 0.0);
  CHECK_THROWS_AS(make_subcategory_task(single), DomainError);
}

namespace {

std::vector<GroupModel> two_gaussians() {
  GroupModel g0, g1;
  g0.components.push_back({0, {0.0, 0.0}, 1.0, 1.0});
  g1.components.push_back({1, {3.0, 0.0}, 1.0, 1.0});
  return {g0, g1};
}

}  // namespace

TEST_CASE("synthetic prior shift: determinism and degenerate priors",
          "[data]") {
  const auto groups = two_gaussians();
  const std::vector<double> train_priors{0.9, 0.1};
  const std::vector<double> test_priors{0.5, 0.5};

  const auto [train_a, test_a] =
      synth_prior_shift(99, groups, train_priors, test_priors, 50, 30);
  const auto [train_b, test_b] =
      synth_prior_shift(99, groups, train_priors, test_priors, 50, 30);
  CHECK(train_a.features == train_b.features);
  CHECK(train_a.labels == train_b.labels);
  CHECK(test_a.groups == test_b.groups);

  const std::vector<double> point{1.0, 0.0};
  const auto [all_zero, unused] =
      synth_prior_shift(7, groups, point, point, 40, 10);
  for (int z : all_zero.groups) CHECK(z == 0);

  const std::vector<double> bad{0.7, 0.7};
  CHECK_THROWS_AS(synth_prior_shift(7, groups, bad, point, 10, 10),
                  DomainError);
}

TEST_CASE("synthetic prior shift: identical priors are exchangeable",
          "[data]") {
  // Monte-Carlo check: with the same priors, train and test feature means
  // agree within a 3-sigma band.
  const auto groups = two_gaussians();
  const std::vector<double> priors{0.5, 0.5};
  const std::size_t n = 4000;
  const auto [train, test] = synth_prior_shift(123, groups, priors, priors, n, n);

  double mean_train = 0.0, mean_test = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_train += train.features[i * 2];
    mean_test += test.features[i * 2];
  }
  mean_train /= static_cast<double>(n);
  mean_test /= static_cast<double>(n);
  // var(x0) = 1 + prior variance of the means = 1 + 0.25 * 9 = 3.25
  const double sigma = std::sqrt(2.0 * 3.25 / static_cast<double>(n));
  CHECK(std::abs(mean_train - mean_test) <= 3.0 * sigma);
}

TEST_CASE("k-fold split: disjoint, covering, deterministic", "[data]") {
  Dataset ds;
  ds.dim = 1;
  ds.num_classes = 2;
  ds.labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  ds.features.assign(10, 0.0);

  const auto splits = kfold_split(ds, 5, 3);
  REQUIRE(splits.size() == 5);
  std::vector<int> seen(10, 0);
  for (const auto& [train_idx, valid_idx] : splits) {
    CHECK(valid_idx.size() == 2);
    CHECK(train_idx.size() == 8);
    for (std::size_t i : valid_idx) ++seen[i];
  }
  for (int count : seen) CHECK(count == 1);

  const auto again = kfold_split(ds, 5, 3);
  CHECK(again[2].second == splits[2].second);
}

TEST_CASE("k-fold split: stratified preconditions", "[data]") {
  Dataset ds;
  ds.dim = 1;
  ds.num_classes = 2;
  ds.labels = {0, 0, 0, 0, 1};
  ds.groups = {0, 0, 0, 0, 1};
  ds.num_groups = 2;
  ds.features.assign(5, 0.0);
  try {
    kfold_split(ds, 3, 0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("group 1") != std::string::npos);
  }
  CHECK_THROWS_AS(kfold_split(ds, 1, 0), DomainError);
}

TEST_CASE("stratified train/test split keeps every group on both sides",
          "[data]") {
  Dataset ds;
  ds.dim = 1;
  ds.num_classes = 2;
  ds.labels.assign(40, 0);
  ds.groups.assign(40, 0);
  for (int i = 30; i < 40; ++i) {
    ds.labels[i] = 1;
    ds.groups[i] = 1;
  }
  ds.num_groups = 2;
  ds.features.assign(40, 0.0);

  const auto [train, test] = train_test_split(ds, 0.8, 11);
  CHECK(train.size() + test.size() == 40);
  for (const Dataset* part : {&train, &test}) {
    std::vector<bool> seen(2, false);
    for (int z : part->groups) seen[z] = true;
    CHECK(seen[0]);
    CHECK(seen[1]);
  }
}

TEST_CASE("standardizer centers train features", "[data]") {
  Dataset ds;
  ds.dim = 2;
  ds.num_classes = 2;
  ds.labels = {0, 1, 0, 1};
  ds.features = {1.0, 10.0, 3.0, 10.0, 5.0, 10.0, 7.0, 10.0};

  const FeatureScaling fs = fit_standardizer(ds);
  const Dataset scaled = apply_standardizer(ds, fs);
  double mean0 = 0.0;
  for (int i = 0; i < 4; ++i) mean0 += scaled.features[i * 2];
  CHECK(mean0 == Approx(0.0).margin(1e-12));
  // constant column: scale falls back to 1, values just center
  CHECK(scaled.features[1] == 0.0);
}
