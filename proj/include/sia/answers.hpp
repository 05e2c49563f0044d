#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sia/prob.hpp"

namespace sia {

enum class TaskKind { numeric, multiple_choice };

struct AnswerLabel {
  enum class Kind { numeric, letter, null };
  Kind kind = Kind::null;
  std::string value; // canonical form; empty for null

  static AnswerLabel numeric(std::string canonical) {
    return {Kind::numeric, std::move(canonical)};
  }
  static AnswerLabel letter(char c) { return {Kind::letter, std::string(1, c)}; }
  static AnswerLabel null() { return {}; }

  bool is_null() const { return kind == Kind::null; }
  bool operator==(const AnswerLabel&) const = default;
  bool operator<(const AnswerLabel& o) const {
    return kind != o.kind ? kind < o.kind : value < o.value;
  }
  std::string to_string() const;
  static AnswerLabel from_string(const std::string& s); // inverse of to_string
};

// Canonical numeric label from free text; strips currency symbols, thousands
// separators and surrounding punctuation, canonicalizes "-0" -> "0" and
// "3.50" -> "3.5". Unparsable text yields the null label.
AnswerLabel normalize_numeric(const std::string& text);

// Uppercase single letter A-E, else null.
AnswerLabel normalize_letter(const std::string& text);

// Deterministic answer extraction from generated text. Numeric: delimiter
// patterns in priority order "####", "answer is", "\boxed{...}", then the last
// standalone number. Multiple choice: last standalone option letter, else a
// unique choice-text match.
AnswerLabel extract_answer(const std::string& generated_text, TaskKind kind,
                           const std::vector<std::pair<char, std::string>>* choice_set = nullptr);

// Equality on (kind, canonical value); null never matches anything.
bool label_correctness(const AnswerLabel& label, const AnswerLabel& gold);

// Empirical rollout answer distribution with optional additive smoothing.
// At alpha = 0 the support is the observed labels only (the plug-in
// estimator); at alpha > 0 the support always also contains the gold and
// null labels.
class EmpiricalAnswerDist {
public:
  EmpiricalAnswerDist(const std::vector<AnswerLabel>& labels, double alpha,
                      const AnswerLabel& gold);

  std::size_t total() const { return n_; }
  double alpha() const { return alpha_; }
  const std::map<AnswerLabel, std::size_t>& counts() const { return counts_; }

  // support and mass under the configured smoothing
  std::vector<std::pair<AnswerLabel, double>> smoothed() const;
  double mass_of(const AnswerLabel& label) const;

  double entropy_nats() const;                        // plug-in over the support
  double surprisal_nats(const AnswerLabel& a) const;  // -log mass, +inf at 0

private:
  std::map<AnswerLabel, std::size_t> counts_;
  std::vector<AnswerLabel> support_;
  std::size_t n_ = 0;
  double alpha_ = 0;
};

} // namespace sia
