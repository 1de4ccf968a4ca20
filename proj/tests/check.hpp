#pragma once

#include "ribe/error.hpp"

#include <doctest.h>

#include <span>
#include <string>

// Runs `expr` and checks it throws ribe::Error with the given code.
#define CHECK_ERROR_CODE(expr, expected)                                                   \
    do {                                                                                   \
        bool thrown_ = false;                                                              \
        try {                                                                              \
            (void)(expr);                                                                  \
        } catch (const ribe::Error& e_) {                                                  \
            thrown_ = true;                                                                \
            CHECK_MESSAGE(e_.code() == (expected), std::string(e_.what()));                             \
        }                                                                                  \
        CHECK_MESSAGE(thrown_, "expected ribe::Error from " #expr);                        \
    } while (0)

inline void check_vector_near(std::span<const double> got, std::span<const double> want, double tol) {
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i)
        CHECK_MESSAGE(std::abs(got[i] - want[i]) <= tol, "index ", i, ": ", got[i], " vs ", want[i]);
}
