#pragma once

#include "sonicforge/evaluator.hpp"

namespace testsig {

using sonicforge::Choice;

struct ExtractionCase {
  const char* raw;
  Choice want;
  int stage;
  int pattern;
};

// Traced by hand through the cascade.
inline const ExtractionCase kExtractionCases[] = {
    {"A", Choice::A, 1, 0},
    {"a.", Choice::A, 2, 0},
    {"b)", Choice::B, 2, 0},
    {"Option: A", Choice::A, 3, 2},
    {"Answer: a", Choice::A, 3, 3},
    {"(A)", Choice::A, 2, 0},
    {"  b.  ", Choice::B, 2, 0},
    {"Neither clip is louder.", Choice::Abstain, 0, 0},
    {"B", Choice::B, 1, 0},
    {"  a  ", Choice::A, 1, 0},
    {"[B]", Choice::B, 2, 0},
    {"A:", Choice::A, 2, 0},
    {"-b-", Choice::B, 2, 0},
    {"option b", Choice::B, 3, 2},
    {"OPTION-B", Choice::B, 3, 2},
    {"The answer is B", Choice::B, 3, 5},
    {"Answer:B", Choice::B, 3, 3},
    {"I think the answer is A.", Choice::A, 3, 5},
    {"It is a tie", Choice::A, 3, 5},
    {"Both A and B", Choice::A, 3, 5},
    {"C", Choice::Abstain, 0, 0},
    {"", Choice::Abstain, 0, 0},
    {"ab", Choice::Abstain, 0, 0},
    {"Option A is louder than option B", Choice::A, 3, 2},
    {"answer - b", Choice::B, 3, 3},
    {"The second clip (B)", Choice::B, 3, 5},
    {"\n\tB\n", Choice::B, 1, 0},
    {"b.)", Choice::B, 2, 0},
    {"apple", Choice::Abstain, 0, 0},
    {"Option: C", Choice::Abstain, 0, 0},
};


}  // namespace testsig
