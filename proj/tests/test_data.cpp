#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "nestmix/data.hpp"

using namespace nestmix;

TEST_CASE("validate_dataset groups by first appearance and sorts stably") {
    std::vector<double> y{1.0, 2.0, 3.0, 4.0, 5.0};
    std::vector<std::string> g{"b", "a", "b", "c", "a"};
    GroupedData d = validate_dataset(y, g);
    CHECK(d.J == 3);
    CHECK(d.N == 5);
    CHECK(d.group_labels == std::vector<std::string>{"b", "a", "c"});
    CHECK(d.group_sizes == std::vector<int>{2, 2, 1});
    CHECK(d.offsets == std::vector<int>{0, 2, 4, 5});
    CHECK(d.values == std::vector<double>{1.0, 3.0, 2.0, 5.0, 4.0});
    CHECK(d.group_of == std::vector<int>{0, 0, 1, 1, 2});
}

TEST_CASE("validate_dataset integer overload keeps original labels") {
    std::vector<double> y{1.0, 2.0, 3.0};
    std::vector<int> g{7, 2, 7};
    GroupedData d = validate_dataset(y, g);
    CHECK(d.J == 2);
    CHECK(d.group_labels == std::vector<std::string>{"7", "2"});
    CHECK(d.group_sizes == std::vector<int>{2, 1});
}

TEST_CASE("validate_dataset rejects malformed input") {
    std::vector<double> y{1.0, 2.0};
    std::vector<std::string> g{"a"};
    CHECK_THROWS_AS(validate_dataset(y, g), ValidationError);
    try {
        validate_dataset(y, g);
    } catch (const ValidationError& e) {
        CHECK(e.code == ValidationError::Code::LengthMismatch);
    }

    std::vector<double> empty;
    std::vector<std::string> gempty;
    try {
        validate_dataset(empty, gempty);
        FAIL("expected throw");
    } catch (const ValidationError& e) {
        CHECK(e.code == ValidationError::Code::Empty);
    }

    std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
    std::vector<std::string> gb{"a", "a"};
    try {
        validate_dataset(bad, gb);
        FAIL("expected throw");
    } catch (const ValidationError& e) {
        CHECK(e.code == ValidationError::Code::NonFinite);
    }
    bad[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate_dataset(bad, gb), ValidationError);
}

TEST_CASE("every group nonempty and sizes sum to N") {
    std::vector<double> y(100, 0.5);
    std::vector<int> g(100);
    for (int i = 0; i < 100; ++i) g[i] = i % 7;
    GroupedData d = validate_dataset(y, g);
    int total = 0;
    for (int j = 0; j < d.J; ++j) {
        CHECK(d.group_sizes[j] >= 1);
        CHECK(d.offsets[j + 1] - d.offsets[j] == d.group_sizes[j]);
        total += d.group_sizes[j];
    }
    CHECK(total == d.N);
}
