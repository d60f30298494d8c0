#pragma once

#include <string>
#include <vector>

namespace snav {

enum class StreetAxis { EastWest, NorthSouth };

int lexicon_count();
// Maximum number of streets a lexicon can name along one axis.
int lexicon_capacity(int lexicon, StreetAxis axis);
// Name of the index-th street along an axis, e.g. "3rd st" or "penn blvd".
std::string street_name(int lexicon, StreetAxis axis, int index);
// Every token any street name of the lexicon can contain.
std::vector<std::string> lexicon_tokens(int lexicon);

std::string ordinal(int n);

// Words used by the direction templates, in a fixed order.
const std::vector<std::string>& template_tokens();
const std::vector<std::string>& compass_words();  // north, northeast, ... clockwise

}  // namespace snav
