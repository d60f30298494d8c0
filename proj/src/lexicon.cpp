#include "snav/lexicon.hpp"

#include <array>

#include "snav/error.hpp"

namespace snav {

namespace {

constexpr int kOrdinalCapacity = 99;

// Second-city names: distinct vocabulary and suffixes from the ordinal grid.
const std::array<const char*, 24> kEastWestNames{
    "carson", "sarah",    "jane",   "mary",   "josephine", "wharton", "larkins", "bingham",
    "sidney", "merriman", "roscoe", "breed",  "eleanor",   "juniper", "manton",  "cabot",
    "pius",   "leticia",  "hilltop", "quarry", "saline",   "muriel",  "arlington", "kosciusko"};
const std::array<const char*, 24> kNorthSouthNames{
    "penn",  "liberty", "smithfield", "forbes",  "grant",  "ross",       "wood",    "market",
    "stanwix", "cherry", "ferry",    "boyd",    "magee",  "gist",       "seneca",  "pride",
    "stevenson", "vickroy", "marion", "chatham", "washington", "bigelow", "duquesne", "fulton"};

}  // namespace

int lexicon_count() { return 2; }

int lexicon_capacity(int lexicon, StreetAxis axis) {
  if (lexicon == 0) return kOrdinalCapacity;
  if (lexicon == 1)
    return static_cast<int>(axis == StreetAxis::EastWest ? kEastWestNames.size() : kNorthSouthNames.size());
  throw ParameterError("unknown lexicon " + std::to_string(lexicon));
}

std::string ordinal(int n) {
  const int mod100 = n % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (n % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(n) + suffix;
}

std::string street_name(int lexicon, StreetAxis axis, int index) {
  if (index < 0 || index >= lexicon_capacity(lexicon, axis)) throw ParameterError("street index out of lexicon range");
  if (lexicon == 0) return ordinal(index + 1) + (axis == StreetAxis::EastWest ? " st" : " ave");
  return axis == StreetAxis::EastWest ? std::string(kEastWestNames[static_cast<std::size_t>(index)]) + " way"
                                      : std::string(kNorthSouthNames[static_cast<std::size_t>(index)]) + " blvd";
}

std::vector<std::string> lexicon_tokens(int lexicon) {
  std::vector<std::string> out;
  if (lexicon == 0) {
    for (int i = 1; i <= kOrdinalCapacity; ++i) out.push_back(ordinal(i));
    out.push_back("st");
    out.push_back("ave");
  } else if (lexicon == 1) {
    for (const char* s : kEastWestNames) out.emplace_back(s);
    for (const char* s : kNorthSouthNames) out.emplace_back(s);
    out.push_back("way");
    out.push_back("blvd");
  } else {
    throw ParameterError("unknown lexicon " + std::to_string(lexicon));
  }
  return out;
}

const std::vector<std::string>& compass_words() {
  static const std::vector<std::string> words{"north", "northeast", "east", "southeast",
                                              "south", "southwest", "west", "northwest"};
  return words;
}

const std::vector<std::string>& template_tokens() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> w{"head", "turn", "left", "right", "onto", "continue", "on",
                               "your", "destination", "will", "be", "the"};
    for (const auto& c : compass_words()) w.push_back(c);
    return w;
  }();
  return words;
}

}  // namespace snav
