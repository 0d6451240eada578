#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "../support/samples.hpp"
#include "reflectcast/analysis/stats.hpp"
#include "reflectcast/analysis/study.hpp"
#include "reflectcast/errors.hpp"

using namespace reflectcast;
using namespace reflectcast::analysis;
using reflectcast::testing::read_json;
using reflectcast::testing::read_text;

namespace {

const std::string kFixtures = REFLECTCAST_FIXTURE_DIR;

const nlohmann::json& oracle() {
    static const auto j = read_json(kFixtures + "/stats_oracle.json");
    return j;
}

// Published per-condition summaries as printed: (n, mean, sd).
struct PublishedRow {
    const char* variable;
    GroupSummary reflection;
    GroupSummary standard;
    double t, p, d;  // reported
};

const std::vector<PublishedRow>& published() {
    static const std::vector<PublishedRow> rows{
        {"learning", {18, 5.89, 1.94}, {18, 6.50, 2.06}, 0.89, 0.38, 0.29},
        {"attractiveness", {18, 26.22, 4.58}, {18, 29.56, 4.00}, 2.26, 0.03, 0.75},
        {"stimulation", {18, 21.22, 3.68}, {18, 23.17, 4.87}, 1.31, 0.20, 0.44},
    };
    return rows;
}

std::vector<double> affine(std::vector<double> v, double c, double k) {
    for (auto& x : v) x = c * x + k;
    return v;
}

std::string header() {
    return "participant_id,condition,excluded,learning_correct,ueq_1,ueq_2,ueq_3,ueq_4,ueq_5,ueq_6,ueq_7,ueq_8,ueq_9,ueq_10\n";
}

std::string row(const std::string& id, const std::string& cond, bool excluded, int learning, int item = 4) {
    std::string r = id + "," + cond + "," + (excluded ? "true" : "false") + "," + std::to_string(learning);
    for (int i = 0; i < 10; ++i) r += "," + std::to_string(item);
    return r + "\n";
}

}  // namespace

TEST_CASE("score_ueq sums and means") {
    std::array<int, kUeqItems> all7;
    all7.fill(7);
    auto s = score_ueq(all7);
    CHECK(s.attractiveness_sum == 42);
    CHECK(s.stimulation_sum == 28);
    CHECK(s.attractiveness_mean == 7.0);
    CHECK(s.stimulation_mean == 7.0);

    std::array<int, kUeqItems> items{4, 5, 4, 4, 5, 4, 3, 6, 2, 7};
    s = score_ueq(items);
    CHECK(s.attractiveness_sum == 26);
    CHECK(s.attractiveness_mean == doctest::Approx(4.333333333333).epsilon(1e-12));
    CHECK(s.stimulation_sum == 18);
    CHECK(s.attractiveness_mean * kAttractivenessItems == s.attractiveness_sum);
    CHECK(s.stimulation_mean * kStimulationItems == s.stimulation_sum);

    items[3] = 8;
    CHECK_THROWS_AS(score_ueq(items), OutOfRangeItem);
    items[3] = 0;
    CHECK_THROWS_AS(score_ueq(items), OutOfRangeItem);
}

TEST_CASE("score_learning counts exact matches") {
    const std::vector<std::string> key{"a", "b", "c", "d", "a", "b", "c", "d", "a", "b"};
    CHECK(score_learning(key, key) == 10);
    const std::vector<std::string> none{"x", "x", "x", "x", "x", "x", "x", "x", "x", "x"};
    CHECK(score_learning(none, key) == 0);
    const std::vector<std::string> six{"a", "b", "c", "d", "a", "b", "x", "x", "x", "x"};
    CHECK(score_learning(six, key) == 6);
    const std::vector<std::string> short_answers{"a", "b"};
    CHECK_THROWS_AS(score_learning(short_answers, key), KeyLengthMismatch);
}

TEST_CASE("answer key formats") {
    CHECK(parse_answer_key("# key\na\nb\n\nc\n") == std::vector<std::string>{"a", "b", "c"});
    CHECK(parse_answer_key("a, b ,c") == std::vector<std::string>{"a", "b", "c"});
    CHECK_THROWS_AS(parse_answer_key("# nothing\n"), ConfigError);
}

TEST_CASE("pooled t-test on the published summaries") {
    for (const auto& row : published()) {
        CAPTURE(row.variable);
        const auto r = pooled_t_test(row.standard, row.reflection);
        const auto& o = oracle()["published"][row.variable];
        CHECK(r.df == 34);
        CHECK(r.t == doctest::Approx(o["t"].get<double>()).epsilon(1e-9));
        CHECK(r.p_two_tailed == doctest::Approx(o["p"].get<double>()).epsilon(1e-9));
        CHECK(r.cohens_d == doctest::Approx(o["d"].get<double>()).epsilon(1e-9));
        CHECK(std::fabs(r.t - row.t) <= 0.10);
        CHECK(std::fabs(r.p_two_tailed - row.p) <= 0.05);
        CHECK(std::fabs(r.cohens_d - row.d) <= 0.05);
        CHECK(cohens_d(row.standard, row.reflection) == doctest::Approx(r.cohens_d));
    }
}

TEST_CASE("published summaries read with an n denominator") {
    for (const auto& row : published()) {
        CAPTURE(row.variable);
        const auto a = from_population_sd(18, row.standard.mean, row.standard.sd);
        const auto b = from_population_sd(18, row.reflection.mean, row.reflection.sd);
        const auto r = pooled_t_test(a, b);
        const auto& o = oracle()["published_population_sd"][row.variable];
        CHECK(r.t == doctest::Approx(o["t"].get<double>()).epsilon(1e-9));
        CHECK(r.p_two_tailed == doctest::Approx(o["p"].get<double>()).epsilon(1e-9));
        // Within rounding of the reported values.
        CHECK(std::fabs(r.t - row.t) <= 0.011);
        CHECK(std::fabs(r.p_two_tailed - row.p) <= 0.005);
        CHECK(std::fabs(r.cohens_d - row.d) <= 0.011);
        CHECK(a.sd_population() == doctest::Approx(row.standard.sd));
    }
}

TEST_CASE("pooled t-test edge cases") {
    const GroupSummary g{18, 5.0, 1.0};
    auto r = pooled_t_test(g, g);
    CHECK(r.t == 0);
    CHECK(r.p_two_tailed == 1);
    CHECK(r.cohens_d == 0);
    CHECK(cohens_d(g, GroupSummary{18, 5.0, 3.0}) == 0);

    r = pooled_t_test(GroupSummary{5, 2.0, 0.0}, GroupSummary{5, 2.0, 0.0});
    CHECK(r.t == 0);
    CHECK(r.p_two_tailed == 1);
    CHECK_FALSE(r.infinite_t);

    r = pooled_t_test(GroupSummary{5, 1.0, 0.0}, GroupSummary{5, 2.0, 0.0});
    CHECK(r.infinite_t);
    CHECK(std::isinf(r.t));
    CHECK(r.t < 0);
    CHECK(r.p_two_tailed == 0);
    CHECK(to_json(r)["t"].is_null());
    CHECK_THROWS_AS(cohens_d(GroupSummary{5, 1.0, 0.0}, GroupSummary{5, 2.0, 0.0}), DegenerateVariance);

    CHECK_THROWS_AS(pooled_t_test(GroupSummary{1, 1.0, 0.0}, g), PreconditionError);
    CHECK_THROWS_AS(pooled_t_test(g, GroupSummary{5, 1.0, -1.0}), PreconditionError);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(summarize(one), PreconditionError);
}

TEST_CASE("five-element samples match the oracle") {
    const auto& o = oracle()["five_element"];
    const auto a = o["a"].get<std::vector<double>>();
    const auto b = o["b"].get<std::vector<double>>();
    const auto r = pooled_t_test(a, b);
    CHECK(r.df == 8);
    CHECK(std::fabs(r.t - o["t"].get<double>()) < 1e-9);
    CHECK(std::fabs(r.p_two_tailed - o["p"].get<double>()) < 1e-9);

    // By hand: means 5.2 and 3.4, sums of squares 8.3 and 6.7.
    const double sp = std::sqrt((8.3 + 6.7) / 8);
    CHECK(std::fabs(r.t - 1.8 / (sp * std::sqrt(0.4))) < 1e-9);
}

TEST_CASE("antisymmetry and affine invariance") {
    const auto a = testing::normal_sample(11, 30);
    auto b = testing::normal_sample(12, 25);
    for (auto& v : b) v += 0.4;
    const auto ab = pooled_t_test(a, b);
    const auto ba = pooled_t_test(b, a);
    CHECK(std::fabs(ab.t + ba.t) < 1e-12);
    CHECK(ab.cohens_d == ba.cohens_d);
    CHECK(ab.p_two_tailed == doctest::Approx(ba.p_two_tailed).epsilon(1e-12));
    CHECK(ab.df == 53);

    for (const auto& [c, k] : std::vector<std::pair<double, double>>{{2.5, -3.0}, {0.01, 100.0}, {40.0, 7.0}}) {
        const auto r = pooled_t_test(affine(a, c, k), affine(b, c, k));
        CHECK(std::fabs(r.t - ab.t) < 1e-9);
        CHECK(std::fabs(r.p_two_tailed - ab.p_two_tailed) < 1e-9);
        CHECK(std::fabs(r.cohens_d - ab.cohens_d) < 1e-9);
    }
}

TEST_CASE("p is monotone in |t| and stays in [0, 1]") {
    double last = 1.0;
    for (double mean = 0; mean <= 5; mean += 0.25) {
        const auto r = pooled_t_test(GroupSummary{10, mean, 1.0}, GroupSummary{10, 0.0, 1.0});
        CHECK(r.p_two_tailed >= 0);
        CHECK(r.p_two_tailed <= 1);
        CHECK(r.p_two_tailed <= last);
        last = r.p_two_tailed;
    }
}

TEST_CASE("sample generator matches the Python mirror") {
    const auto& g = oracle()["generator"];
    testing::SplitMix64 rng(42);
    for (const auto& s : g["first_u64_seed42"]) CHECK(std::to_string(rng.next()) == s.get<std::string>());
    const auto normals = testing::normal_sample(7, 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(normals[i] == doctest::Approx(g["first_normals_seed7"][i].get<double>()).epsilon(1e-15));
}

TEST_CASE("D'Agostino-Pearson agrees with the oracle") {
    const auto& cal = oracle()["normal_calibration"];
    const auto& ps = cal["p_values"];
    int above = 0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const auto r = dagostino_pearson(testing::normal_sample(i + 1, cal["n"].get<std::size_t>()));
        CHECK(std::fabs(r.p - ps[i].get<double>()) < 1e-9);
        above += r.p > 0.05;
    }
    CHECK(above == cal["p_above_0_05"].get<int>());

    const auto& sk = oracle()["skewed"];
    const auto skewed = dagostino_pearson(testing::exponential_sample(sk["seed"].get<std::uint64_t>(), sk["n"].get<std::size_t>()));
    CHECK(skewed.k2 == doctest::Approx(sk["k2"].get<double>()).epsilon(1e-9));
    CHECK(skewed.p < 0.01);

    const auto& sm = oracle()["small_normal"];
    const auto small = dagostino_pearson(testing::normal_sample(sm["seed"].get<std::uint64_t>(), sm["n"].get<std::size_t>()));
    CHECK(small.k2 == doctest::Approx(sm["k2"].get<double>()).epsilon(1e-9));
    CHECK(small.p == doctest::Approx(sm["p"].get<double>()).epsilon(1e-9));
}

TEST_CASE("normality preconditions and invariance") {
    CHECK_THROWS_AS(dagostino_pearson(testing::normal_sample(3, 10)), SampleTooSmall);
    CHECK_NOTHROW(dagostino_pearson(testing::normal_sample(3, kMinNormalitySample)));
    const std::vector<double> flat(30, 2.0);
    CHECK_THROWS_AS(dagostino_pearson(flat), DegenerateVariance);

    for (std::uint64_t seed : {5u, 2024u}) {
        const auto x = seed == 5 ? testing::normal_sample(seed, 120) : testing::exponential_sample(seed, 200);
        const auto base = dagostino_pearson(x);
        for (const auto& [c, k] : std::vector<std::pair<double, double>>{{3.0, 10.0}, {0.001, -5.0}}) {
            CHECK(std::fabs(dagostino_pearson(affine(x, c, k)).k2 - base.k2) < 1e-9);
        }
    }
}

TEST_CASE("records CSV parsing") {
    SUBCASE("empty file") {
        try {
            parse_records_csv("");
            FAIL("expected a schema error");
        } catch (const RecordSchemaError& e) {
            CHECK(e.line() == 1);
        }
    }
    SUBCASE("line numbers") {
        const auto text = header() + row("R1", "reflection", false, 5) + row("R2", "reflection", false, 5, 9);
        try {
            parse_records_csv(text);
            FAIL("expected a schema error");
        } catch (const RecordSchemaError& e) {
            CHECK(e.line() == 3);
            CHECK(std::string(e.what()).find("ueq_1") != std::string::npos);
        }
    }
    SUBCASE("bad fields") {
        CHECK_THROWS_AS(parse_records_csv(header() + row("R1", "mixed", false, 5)), RecordSchemaError);
        CHECK_THROWS_AS(parse_records_csv(header() + row("R1", "standard", false, 11)), RecordSchemaError);
        CHECK_THROWS_AS(parse_records_csv(header() + row("R1", "standard", false, 5) + row("R1", "standard", false, 5)),
                        RecordSchemaError);
        CHECK_THROWS_AS(parse_records_csv(header() + "R1,standard,false,5,4,4\n"), RecordSchemaError);
        CHECK_THROWS_AS(parse_records_csv("participant_id,condition\nR1,standard\n"), RecordSchemaError);
    }
    SUBCASE("quoted fields and free column order") {
        const auto text =
            "ueq_10,ueq_9,ueq_8,ueq_7,ueq_6,ueq_5,ueq_4,ueq_3,ueq_2,ueq_1,learning_correct,excluded,condition,participant_id\n"
            "1,2,3,4,5,6,7,1,2,3,8,no,Standard,\"P, 1\"\n";
        const auto recs = parse_records_csv(text);
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].participant_id == "P, 1");
        CHECK(recs[0].condition == Condition::Standard);
        CHECK(recs[0].ueq_items[0] == 3);
        CHECK(recs[0].ueq_items[9] == 1);
        CHECK(recs[0].learning_correct == 8);
    }
    SUBCASE("answer columns scored with a key") {
        const std::vector<std::string> key{"a", "b", "c"};
        std::string text = "participant_id,condition,excluded,ueq_1,ueq_2,ueq_3,ueq_4,ueq_5,ueq_6,ueq_7,ueq_8,ueq_9,ueq_10,"
                           "answer_1,answer_2,answer_3\n"
                           "R1,reflection,false,4,4,4,4,4,4,4,4,4,4,a,x,c\n";
        const auto recs = parse_records_csv(text, &key);
        CHECK(recs[0].learning_correct == 2);
        CHECK_THROWS_AS(parse_records_csv(text), RecordSchemaError);
    }
}

TEST_CASE("excluded participants drop out of the summaries") {
    std::string text = header();
    for (int i = 0; i < 3; ++i) text += row("R" + std::to_string(i), "reflection", false, 4 + i);
    for (int i = 0; i < 3; ++i) text += row("S" + std::to_string(i), "standard", false, 6 + i);
    const auto base = analyze(parse_records_csv(text));
    text += row("S9", "standard", true, 0);
    const auto filtered = analyze(parse_records_csv(text));
    CHECK(filtered.records == 7);
    CHECK(filtered.excluded == 1);
    CHECK(filtered.comparisons[0].standard.n == 3);
    CHECK(filtered.comparisons[0].standard.mean == base.comparisons[0].standard.mean);

    text += row("S8", "standard", false, 0);
    CHECK(analyze(parse_records_csv(text)).comparisons[0].standard.n == 4);

    const auto too_few = header() + row("R1", "reflection", false, 5) + row("S1", "standard", false, 5) +
                         row("S2", "standard", false, 6);
    CHECK_THROWS_AS(analyze(parse_records_csv(too_few)), PreconditionError);
}

TEST_CASE("constructed records reproduce the published summaries") {
    const auto records = load_records_csv(kFixtures + "/published_records.csv");
    const auto report = analyze(records);
    const auto expected = read_json(kFixtures + "/published_records.json");
    CHECK(report.excluded == 2);
    REQUIRE(report.comparisons.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& c = report.comparisons[i];
        const auto& row = published()[i];
        const auto& e = expected[c.variable];
        CAPTURE(c.variable);
        CHECK(c.variable == row.variable);
        CHECK(c.reflection.n == 18);
        CHECK(c.standard.n == 18);
        // Means and n-denominator SDs agree with the printed table to 2 dp.
        CHECK(std::round(c.reflection.mean * 100) == std::round(row.reflection.mean * 100));
        CHECK(std::round(c.standard.mean * 100) == std::round(row.standard.mean * 100));
        CHECK(std::round(c.reflection.sd_population() * 100) == std::round(row.reflection.sd * 100));
        CHECK(std::round(c.standard.sd_population() * 100) == std::round(row.standard.sd * 100));
        CHECK(c.test.t == doctest::Approx(e["t"].get<double>()).epsilon(1e-9));
        CHECK(c.test.p_two_tailed == doctest::Approx(e["p"].get<double>()).epsilon(1e-9));
        CHECK(c.test.cohens_d == doctest::Approx(e["d"].get<double>()).epsilon(1e-9));
        CHECK(std::round(c.test.t * 100) == std::round(row.t * 100));
        CHECK(std::round(c.test.p_two_tailed * 100) == std::round(row.p * 100));
    }
    // 36 included participants clear the normality floor.
    for (const auto& [name, n] : report.normality) CHECK(n.has_value());

    const auto table = format_table(report, SdConvention::Population);
    CHECK(table.find("5.89 (1.94)") != std::string::npos);
    CHECK(table.find("29.56 (4.00)") != std::string::npos);
    CHECK(table.find("t(34) = 2.26") != std::string::npos);
    const auto j = to_json(report);
    CHECK(j["included"] == 36);
    CHECK(j["comparisons"][1]["test"]["df"] == 34);
}
