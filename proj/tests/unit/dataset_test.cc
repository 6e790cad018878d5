// Copyright 2026 The dpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dpr/dataset.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace dpr {
namespace {

using ::dpr::testing::Boolean;
using ::dpr::testing::Categorical;
using ::dpr::testing::Numeric;
using ::testing::HasSubstr;

Schema TestSchema() {
  Schema s;
  s.dataset_id = "survey";
  s.variables = {Numeric("age", 18, 90), Categorical("race", {"white", "black", "asian"}),
                 Boolean("employed")};
  return s;
}

absl::StatusOr<Dataset> Ingest(const std::string& csv) {
  std::istringstream in(csv);
  return IngestCsv(in, TestSchema());
}

TEST(DatasetTest, IngestsAndClamps) {
  const auto d = Ingest(
      "age,race,employed\n"
      "30,white,true\n"
      "10,black,0\n"
      "95,martian,yes\n"
      "NA,,\n"
      "\"40\",asian,F\r\n");
  DPR_ASSERT_OK(d);
  EXPECT_EQ(d->id(), "survey");
  EXPECT_EQ(d->n(), 5);
  const std::vector<double>& age = d->Find("age")->values;
  EXPECT_EQ(age[0], 30);
  EXPECT_EQ(age[1], 18);
  EXPECT_EQ(age[2], 90);
  EXPECT_TRUE(std::isnan(age[3]));
  EXPECT_EQ(age[4], 40);
  const std::vector<double>& race = d->Find("race")->values;
  EXPECT_EQ(race[0], 0);
  EXPECT_EQ(race[1], 1);
  EXPECT_EQ(race[2], 3);  // "other"
  EXPECT_EQ(race[4], 2);
  const std::vector<double>& employed = d->Find("employed")->values;
  EXPECT_EQ(employed[0], 1);
  EXPECT_EQ(employed[1], 0);
  EXPECT_EQ(employed[2], 1);
  EXPECT_EQ(employed[4], 0);
  EXPECT_EQ(d->clamped(), 3);
  EXPECT_EQ(d->missing(), 3);
  for (const Column& c : d->columns()) EXPECT_EQ(c.spec.n, 5);
}

TEST(DatasetTest, HeaderOrderIsFree) {
  const auto d = Ingest("employed,age,race\n1,20,asian\n");
  DPR_ASSERT_OK(d);
  EXPECT_EQ(d->Find("age")->values[0], 20);
  EXPECT_EQ(d->Find("race")->values[0], 2);
}

TEST(DatasetTest, HeaderMismatchNamesTheColumn) {
  EXPECT_THAT(std::string(Ingest("age,race,employed,zip\n1,a,1,2\n").status().message()),
              HasSubstr("'zip' is not in the schema"));
  EXPECT_THAT(std::string(Ingest("age,race\n1,a\n").status().message()),
              HasSubstr("'employed' has no CSV column"));
  EXPECT_THAT(std::string(Ingest("age,age,race,employed\n").status().message()),
              HasSubstr("'age' appears twice"));
}

TEST(DatasetTest, BadRowsNameRowAndColumn) {
  EXPECT_THAT(std::string(Ingest("age,race,employed\n1,a,1\nold,a,1\n").status().message()),
              HasSubstr("row 2: non-numeric token 'old' in numeric column 'age'"));
  EXPECT_THAT(std::string(Ingest("age,race,employed\n1,a\n").status().message()),
              HasSubstr("row 1: expected 3 fields"));
  EXPECT_THAT(std::string(Ingest("age,race,employed\n").status().message()),
              HasSubstr("no data rows"));
  EXPECT_THAT(std::string(Ingest("").status().message()), HasSubstr("empty CSV"));
}

TEST(DatasetTest, ThousandRowsFromFile) {
  const auto dir = ::dpr::testing::MakeTempDir("dataset");
  const std::string path = (dir / "data.csv").string();
  {
    std::ofstream out(path);
    out << "age,race,employed\n";
    std::mt19937_64 gen(1);
    for (int i = 0; i < 1000; ++i) {
      out << (gen() % 120) << "," << (gen() % 2 ? "white" : "other") << ","
          << (gen() % 2) << "\n";
    }
  }
  const auto d = IngestCsvFile(path, TestSchema());
  DPR_ASSERT_OK(d);
  EXPECT_EQ(d->n(), 1000);
  for (double v : d->Find("age")->values) {
    EXPECT_GE(v, 18);
    EXPECT_LE(v, 90);
  }
  EXPECT_EQ(IngestCsvFile((dir / "none.csv").string(), TestSchema()).status().code(),
            absl::StatusCode::kNotFound);
}

TEST(DatasetTest, SchemaJsonRoundTripAndValidation) {
  const Schema s = TestSchema();
  const auto back = SchemaFromJson(ToJson(s));
  DPR_ASSERT_OK(back);
  EXPECT_EQ(ToJson(*back), ToJson(s));

  Schema dup = s;
  dup.variables.push_back(Numeric("age", 0, 1));
  EXPECT_THAT(std::string(dup.Validate().message()), HasSubstr("duplicate variable 'age'"));
  Schema bad = s;
  bad.variables[0].upper = 0;
  EXPECT_THAT(std::string(bad.Validate().message()), HasSubstr("'age'"));
  EXPECT_FALSE(SchemaFromJson(nlohmann::json::array()).ok());
}

TEST(DatasetTest, FromColumnsClampsAndChecksShape) {
  const auto d = DatasetFromColumns(TestSchema(), {{-5, 50}, {0, 7}, {1, 2}});
  DPR_ASSERT_OK(d);
  EXPECT_EQ(d->Find("age")->values, (std::vector<double>{18, 50}));
  EXPECT_EQ(d->Find("race")->values, (std::vector<double>{0, 3}));
  EXPECT_EQ(d->Find("employed")->values, (std::vector<double>{1, 1}));
  EXPECT_EQ(d->clamped(), 3);
  EXPECT_FALSE(DatasetFromColumns(TestSchema(), {{1}, {0}}).ok());
  EXPECT_FALSE(DatasetFromColumns(TestSchema(), {{1, 2}, {0}, {1, 1}}).ok());
}

}  // namespace
}  // namespace dpr
