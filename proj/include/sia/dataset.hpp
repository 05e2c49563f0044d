#pragma once

#include <string>
#include <vector>

#include "sia/answers.hpp"

namespace sia {

enum class DatasetFormat { gsm8k_jsonl, arc_jsonl, svamp_jsonl, synthetic };

DatasetFormat dataset_format_from_string(const std::string& s);
std::string dataset_format_to_string(DatasetFormat f);

struct QuestionInstance {
  std::string id;
  TaskKind task_kind = TaskKind::numeric;
  std::string prompt_text;
  AnswerLabel gold_answer;
  std::vector<std::pair<char, std::string>> choice_set; // multiple_choice only
};

// JSONL loaders; one record per line, stable file order, gold answers
// normalized. Malformed lines raise ValidationError with the line number.
std::vector<QuestionInstance> load_dataset(const std::string& path, DatasetFormat format);

} // namespace sia
