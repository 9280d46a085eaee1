#pragma once

#include <string>
#include <string_view>

namespace topicintent {

/// Porter (1980) suffix-stripping stemmer, original rule set.
/// Input must be lowercase ASCII letters.
std::string porter_stem(std::string_view word);

/// Bundled English stopword list (179 entries, lowercase).
bool is_stopword(std::string_view word);
std::size_t stopword_count();

}  // namespace topicintent
