#include "topicintent/text.hpp"

#include <array>

namespace topicintent {
namespace {

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
};

bool is_consonant(std::string_view w, std::size_t i) {
  switch (w[i]) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
      return false;
    case 'y':
      return i == 0 || !is_consonant(w, i - 1);
    default:
      return true;
  }
}

// Number of VC sequences in [C](VC)^m[V].
int measure(std::string_view stem) {
  int m = 0;
  std::size_t i = 0;
  const std::size_t n = stem.size();
  while (i < n && is_consonant(stem, i)) ++i;
  while (i < n) {
    while (i < n && !is_consonant(stem, i)) ++i;
    if (i >= n) break;
    while (i < n && is_consonant(stem, i)) ++i;
    ++m;
  }
  return m;
}

bool contains_vowel(std::string_view stem) {
  for (std::size_t i = 0; i < stem.size(); ++i) {
    if (!is_consonant(stem, i)) return true;
  }
  return false;
}

bool ends_double_consonant(std::string_view w) {
  const std::size_t n = w.size();
  return n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1);
}

// *o: ends consonant-vowel-consonant, last consonant not w, x or y.
bool ends_cvc(std::string_view w) {
  const std::size_t n = w.size();
  if (n < 3) return false;
  if (!is_consonant(w, n - 3) || is_consonant(w, n - 2) || !is_consonant(w, n - 1)) {
    return false;
  }
  const char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(std::string_view w, std::string_view suffix) {
  return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

void replace_suffix(std::string& w, std::size_t suffix_len, std::string_view repl) {
  w.resize(w.size() - suffix_len);
  w.append(repl);
}

// The first listed suffix that matches is the only one considered; its
// condition decides whether it fires.
template <std::size_t N, class Cond>
void apply_first(std::string& w, const std::array<Rule, N>& rules, Cond condition) {
  for (const Rule& r : rules) {
    if (!ends_with(w, r.suffix)) continue;
    std::string_view stem(w.data(), w.size() - r.suffix.size());
    if (condition(stem)) replace_suffix(w, r.suffix.size(), r.replacement);
    return;
  }
}

void step1a(std::string& w) {
  if (ends_with(w, "sses")) {
    replace_suffix(w, 4, "ss");
  } else if (ends_with(w, "ies")) {
    replace_suffix(w, 3, "i");
  } else if (ends_with(w, "ss")) {
    // unchanged
  } else if (ends_with(w, "s")) {
    replace_suffix(w, 1, "");
  }
}

void step1b(std::string& w) {
  if (ends_with(w, "eed")) {
    if (measure(std::string_view(w).substr(0, w.size() - 3)) > 0) replace_suffix(w, 3, "ee");
    return;
  }
  std::size_t cut = 0;
  if (ends_with(w, "ed") && contains_vowel(std::string_view(w).substr(0, w.size() - 2))) {
    cut = 2;
  } else if (ends_with(w, "ing") &&
             contains_vowel(std::string_view(w).substr(0, w.size() - 3))) {
    cut = 3;
  }
  if (cut == 0) return;
  w.resize(w.size() - cut);

  if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
    w.push_back('e');
  } else if (ends_double_consonant(w) && !ends_with(w, "l") && !ends_with(w, "s") &&
             !ends_with(w, "z")) {
    w.pop_back();
  } else if (measure(w) == 1 && ends_cvc(w)) {
    w.push_back('e');
  }
}

void step1c(std::string& w) {
  if (ends_with(w, "y") && contains_vowel(std::string_view(w).substr(0, w.size() - 1))) {
    w.back() = 'i';
  }
}

void step2(std::string& w) {
  static constexpr std::array<Rule, 20> rules{{
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},  {"anci", "ance"},
      {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},    {"entli", "ent"},
      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
  }};
  apply_first(w, rules, [](std::string_view stem) { return measure(stem) > 0; });
}

void step3(std::string& w) {
  static constexpr std::array<Rule, 7> rules{{
      {"icate", "ic"},
      {"ative", ""},
      {"alize", "al"},
      {"iciti", "ic"},
      {"ical", "ic"},
      {"ful", ""},
      {"ness", ""},
  }};
  apply_first(w, rules, [](std::string_view stem) { return measure(stem) > 0; });
}

void step4(std::string& w) {
  static constexpr std::array<Rule, 19> rules{{
      {"al", ""},  {"ance", ""}, {"ence", ""}, {"er", ""},  {"ic", ""},
      {"able", ""}, {"ible", ""}, {"ant", ""},  {"ement", ""}, {"ment", ""},
      {"ent", ""},  {"ion", ""},  {"ou", ""},   {"ism", ""},  {"ate", ""},
      {"iti", ""},  {"ous", ""},  {"ive", ""},  {"ize", ""},
  }};
  for (const Rule& r : rules) {
    if (!ends_with(w, r.suffix)) continue;
    std::string_view stem(w.data(), w.size() - r.suffix.size());
    bool ok = measure(stem) > 1;
    if (r.suffix == "ion") ok = ok && !stem.empty() && (stem.back() == 's' || stem.back() == 't');
    if (ok) replace_suffix(w, r.suffix.size(), "");
    return;
  }
}

void step5(std::string& w) {
  if (ends_with(w, "e")) {
    std::string_view stem(w.data(), w.size() - 1);
    const int m = measure(stem);
    if (m > 1 || (m == 1 && !ends_cvc(stem))) w.pop_back();
  }
  if (measure(w) > 1 && ends_double_consonant(w) && ends_with(w, "l")) w.pop_back();
}

}  // namespace

std::string porter_stem(std::string_view word) {
  std::string w(word);
  if (w.empty()) return w;
  step1a(w);
  step1b(w);
  step1c(w);
  step2(w);
  step3(w);
  step4(w);
  step5(w);
  return w;
}

}  // namespace topicintent
