#pragma once

#include <set>
#include <string>
#include <vector>

// Text normalization shared by answer extraction, Jaccard tokenization and
// the sentence splitter. All rules here are frozen: downstream metric values
// depend on them.

namespace uq::text {

// Lowercase (ASCII), trim whitespace, strip leading/trailing punctuation.
std::string normalize_answer(const std::string& s);

// Lowercased whitespace-split tokens with punctuation stripped; empty tokens
// dropped.
std::set<std::string> token_set(const std::string& s);
std::vector<std::string> tokenize(const std::string& s);

// Rule-based splitter: breaks after [.!?] runs followed by whitespace and an
// upper-case letter, digit or opening quote, with an abbreviation guard list.
// Concatenating the sentences (modulo whitespace) reconstructs the input.
std::vector<std::string> split_sentences(const std::string& s);

}  // namespace uq::text
