#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. They follow the formulas literally and favour clarity over speed;
// none of them calls into the library code they check.

#include <cstdint>
#include <string>
#include <vector>

namespace aggtopics::oracle {

using Table = std::vector<std::vector<double>>;

// FREX by explicit counting: O(K V^2).
Table frex(const Table& phi, double w);

// Coherence over documents given as token sets. Top words are the M largest
// phi entries of the topic, ties broken by term string.
std::vector<double> coherence(const Table& phi, const std::vector<std::string>& terms,
                              const std::vector<std::vector<std::string>>& docs, std::size_t m);

// c-TF-IDF over documents given as token lists with a cluster per document.
// Returns a K x V table in the order of `terms`.
Table ctfidf(const std::vector<std::vector<std::string>>& docs, const std::vector<int>& assignment, int k,
             const std::vector<std::string>& terms);

// Best agreement between two labelings over all relabelings of the second.
double best_relabel_accuracy(const std::vector<int>& truth, const std::vector<int>& found, int k);

}  // namespace aggtopics::oracle
