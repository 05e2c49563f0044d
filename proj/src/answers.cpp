#include "sia/answers.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include "sia/infotheory.hpp"

namespace sia {

std::string AnswerLabel::to_string() const {
  switch (kind) {
  case Kind::numeric:
    return "num:" + value;
  case Kind::letter:
    return "letter:" + value;
  case Kind::null:
    return "null";
  }
  return "null";
}

AnswerLabel AnswerLabel::from_string(const std::string& s) {
  if (s.rfind("num:", 0) == 0)
    return numeric(s.substr(4));
  if (s.rfind("letter:", 0) == 0 && s.size() == 8)
    return letter(s[7]);
  if (s == "null")
    return null();
  throw ValidationError("AnswerLabel: cannot parse '" + s + "'");
}

namespace {

// remove '$' plus UTF-8 sequences for the euro and pound signs
std::string strip_currency(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '$') {
      ++i;
    } else if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
               static_cast<unsigned char>(text[i + 1]) == 0x82 &&
               static_cast<unsigned char>(text[i + 2]) == 0xAC) {
      i += 3; // euro
    } else if (i + 1 < text.size() && static_cast<unsigned char>(text[i]) == 0xC2 &&
               static_cast<unsigned char>(text[i + 1]) == 0xA3) {
      i += 2; // pound
    } else {
      out.push_back(text[i++]);
    }
  }
  return out;
}

const std::regex& number_re() {
  static const std::regex re(R"([-+]?\d[\d,]*(?:\.\d+)?)");
  return re;
}

std::string canonical_number(std::string digits) {
  bool negative = false;
  if (!digits.empty() && (digits[0] == '+' || digits[0] == '-')) {
    negative = digits[0] == '-';
    digits.erase(digits.begin());
  }
  digits.erase(std::remove(digits.begin(), digits.end(), ','), digits.end());

  std::string intpart = digits, frac;
  if (auto dot = digits.find('.'); dot != std::string::npos) {
    intpart = digits.substr(0, dot);
    frac = digits.substr(dot + 1);
  }
  while (intpart.size() > 1 && intpart.front() == '0')
    intpart.erase(intpart.begin());
  if (intpart.empty())
    intpart = "0";
  while (!frac.empty() && frac.back() == '0')
    frac.pop_back();

  std::string out = intpart;
  if (!frac.empty())
    out += "." + frac;
  bool is_zero = out.find_first_not_of("0.") == std::string::npos;
  if (negative && !is_zero)
    out.insert(out.begin(), '-');
  return out;
}

bool standalone_at(const std::string& text, std::size_t pos, std::size_t len) {
  auto wordish = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  if (pos > 0 && wordish(text[pos - 1]))
    return false;
  if (pos + len < text.size() && wordish(text[pos + len]))
    return false;
  return true;
}

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::size_t rfind_ci(const std::string& haystack, const std::string& needle) {
  return lowercase(haystack).rfind(lowercase(needle));
}

AnswerLabel last_number_label(const std::string& text) {
  auto begin = std::sregex_iterator(text.begin(), text.end(), number_re());
  AnswerLabel last = AnswerLabel::null();
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    auto cand = normalize_numeric(it->str());
    if (!cand.is_null())
      last = cand;
  }
  return last;
}

AnswerLabel extract_numeric(const std::string& text) {
  if (auto pos = text.rfind("####"); pos != std::string::npos) {
    std::string rest = text.substr(pos + 4);
    if (auto nl = rest.find('\n'); nl != std::string::npos)
      rest.resize(nl);
    return normalize_numeric(rest);
  }
  if (auto pos = rfind_ci(text, "answer is"); pos != std::string::npos) {
    std::string rest = text.substr(pos + 9);
    if (auto nl = rest.find('\n'); nl != std::string::npos)
      rest.resize(nl);
    std::smatch m;
    if (std::regex_search(rest, m, number_re()))
      return normalize_numeric(m.str());
    return AnswerLabel::null();
  }
  if (auto pos = text.rfind("\\boxed{"); pos != std::string::npos) {
    auto close = text.find('}', pos);
    if (close != std::string::npos)
      return normalize_numeric(text.substr(pos + 7, close - pos - 7));
    return AnswerLabel::null();
  }
  return last_number_label(text);
}

AnswerLabel extract_choice(const std::string& text,
                           const std::vector<std::pair<char, std::string>>* choices) {
  // last standalone uppercase option letter
  AnswerLabel last = AnswerLabel::null();
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c >= 'A' && c <= 'E' && standalone_at(text, i, 1))
      last = AnswerLabel::letter(c);
  }
  if (!last.is_null())
    return last;
  // parenthesized lowercase, e.g. "(c)"
  for (std::size_t i = 0; i + 2 < text.size(); ++i)
    if (text[i] == '(' && text[i + 1] >= 'a' && text[i + 1] <= 'e' && text[i + 2] == ')')
      last = AnswerLabel::letter(static_cast<char>(std::toupper(text[i + 1])));
  if (!last.is_null())
    return last;
  // unique choice-text match
  if (choices) {
    std::string lower = lowercase(text);
    AnswerLabel match = AnswerLabel::null();
    int hits = 0;
    for (const auto& [letter, body] : *choices) {
      if (!body.empty() && lower.find(lowercase(body)) != std::string::npos) {
        ++hits;
        match = AnswerLabel::letter(letter);
      }
    }
    if (hits == 1)
      return match;
  }
  return AnswerLabel::null();
}

} // namespace

AnswerLabel normalize_numeric(const std::string& text) {
  std::string cleaned = strip_currency(text);
  std::smatch m;
  if (!std::regex_search(cleaned, m, number_re()))
    return AnswerLabel::null();
  return AnswerLabel::numeric(canonical_number(m.str()));
}

AnswerLabel normalize_letter(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c)) && c != '.' && c != ')' && c != '(')
      t.push_back(c);
  if (t.size() != 1)
    return AnswerLabel::null();
  char c = static_cast<char>(std::toupper(static_cast<unsigned char>(t[0])));
  if (c < 'A' || c > 'E')
    return AnswerLabel::null();
  return AnswerLabel::letter(c);
}

AnswerLabel extract_answer(const std::string& generated_text, TaskKind kind,
                           const std::vector<std::pair<char, std::string>>* choice_set) {
  if (kind == TaskKind::numeric)
    return extract_numeric(generated_text);
  return extract_choice(generated_text, choice_set);
}

bool label_correctness(const AnswerLabel& label, const AnswerLabel& gold) {
  if (label.is_null() || gold.is_null())
    return false;
  return label == gold;
}

EmpiricalAnswerDist::EmpiricalAnswerDist(const std::vector<AnswerLabel>& labels, double alpha,
                                         const AnswerLabel& gold)
    : n_(labels.size()), alpha_(alpha) {
  if (labels.empty())
    throw ValidationError("EmpiricalAnswerDist: no labels");
  if (alpha < 0.0)
    throw ValidationError("EmpiricalAnswerDist: negative smoothing");
  for (const auto& l : labels)
    ++counts_[l];
  for (const auto& [l, c] : counts_)
    support_.push_back(l);
  if (alpha_ > 0.0) {
    for (const AnswerLabel& extra : {gold, AnswerLabel::null()})
      if (!counts_.count(extra)) {
        counts_[extra] = 0;
        support_.push_back(extra);
      }
  }
  std::sort(support_.begin(), support_.end());
}

std::vector<std::pair<AnswerLabel, double>> EmpiricalAnswerDist::smoothed() const {
  std::vector<std::pair<AnswerLabel, double>> out;
  double denom = static_cast<double>(n_) + alpha_ * static_cast<double>(support_.size());
  for (const auto& l : support_)
    out.emplace_back(l, (static_cast<double>(counts_.at(l)) + alpha_) / denom);
  return out;
}

double EmpiricalAnswerDist::mass_of(const AnswerLabel& label) const {
  auto it = counts_.find(label);
  if (it == counts_.end())
    return 0.0;
  double denom = static_cast<double>(n_) + alpha_ * static_cast<double>(support_.size());
  return (static_cast<double>(it->second) + alpha_) / denom;
}

double EmpiricalAnswerDist::entropy_nats() const {
  double h = 0.0;
  for (const auto& [l, p] : smoothed())
    if (p > 0.0)
      h -= p * std::log(p);
  return h;
}

double EmpiricalAnswerDist::surprisal_nats(const AnswerLabel& a) const {
  double p = mass_of(a);
  return p > 0.0 ? -std::log(p) : kInf;
}

} // namespace sia
