#include "sia/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sia {

using nlohmann::json;

DatasetFormat dataset_format_from_string(const std::string& s) {
  if (s == "gsm8k_jsonl")
    return DatasetFormat::gsm8k_jsonl;
  if (s == "arc_jsonl")
    return DatasetFormat::arc_jsonl;
  if (s == "svamp_jsonl")
    return DatasetFormat::svamp_jsonl;
  if (s == "synthetic")
    return DatasetFormat::synthetic;
  throw ValidationError("unknown dataset format '" + s + "'");
}

std::string dataset_format_to_string(DatasetFormat f) {
  switch (f) {
  case DatasetFormat::gsm8k_jsonl:
    return "gsm8k_jsonl";
  case DatasetFormat::arc_jsonl:
    return "arc_jsonl";
  case DatasetFormat::svamp_jsonl:
    return "svamp_jsonl";
  case DatasetFormat::synthetic:
    return "synthetic";
  }
  return "?";
}

namespace {

std::string number_to_text(const json& v) {
  if (v.is_string())
    return v.get<std::string>();
  if (v.is_number_integer())
    return std::to_string(v.get<long long>());
  if (v.is_number_float()) {
    std::ostringstream os;
    os.precision(15);
    os << v.get<double>();
    return os.str();
  }
  throw ValidationError("expected number or string");
}

char answer_key_letter(const std::string& key) {
  if (key.size() == 1) {
    char c = key[0];
    if (c >= 'A' && c <= 'E')
      return c;
    if (c >= 'a' && c <= 'e')
      return static_cast<char>(c - 'a' + 'A');
    if (c >= '1' && c <= '5') // some splits use 1-based numeric keys
      return static_cast<char>('A' + (c - '1'));
  }
  throw ValidationError("unsupported answerKey '" + key + "'");
}

QuestionInstance parse_gsm8k(const json& j, std::size_t line_no) {
  QuestionInstance q;
  q.id = j.value("id", "gsm8k-" + std::to_string(line_no));
  q.task_kind = TaskKind::numeric;
  q.prompt_text = j.at("question").get<std::string>();
  const std::string answer = j.at("answer").get<std::string>();
  auto pos = answer.rfind("####");
  if (pos == std::string::npos)
    throw ValidationError("gsm8k answer without '####' delimiter");
  q.gold_answer = normalize_numeric(answer.substr(pos + 4));
  if (q.gold_answer.is_null())
    throw ValidationError("gsm8k gold answer unparsable");
  return q;
}

QuestionInstance parse_arc(const json& j, std::size_t line_no) {
  QuestionInstance q;
  q.id = j.value("id", "arc-" + std::to_string(line_no));
  q.task_kind = TaskKind::multiple_choice;
  const json* choices = nullptr;
  if (j.at("question").is_object()) {
    q.prompt_text = j["question"].at("stem").get<std::string>();
    choices = &j["question"].at("choices");
  } else {
    q.prompt_text = j.at("question").get<std::string>();
    choices = &j.at("choices");
  }
  for (const auto& c : *choices) {
    std::string label = c.at("label").get<std::string>();
    q.choice_set.emplace_back(answer_key_letter(label), c.at("text").get<std::string>());
  }
  if (q.choice_set.empty())
    throw ValidationError("arc record without choices");
  q.gold_answer = AnswerLabel::letter(answer_key_letter(j.at("answerKey").get<std::string>()));
  return q;
}

QuestionInstance parse_svamp(const json& j, std::size_t line_no) {
  QuestionInstance q;
  q.id = j.value("ID", "svamp-" + std::to_string(line_no));
  q.task_kind = TaskKind::numeric;
  q.prompt_text = j.at("Body").get<std::string>() + " " + j.at("Question").get<std::string>();
  q.gold_answer = normalize_numeric(number_to_text(j.at("Answer")));
  if (q.gold_answer.is_null())
    throw ValidationError("svamp gold answer unparsable");
  return q;
}

} // namespace

std::vector<QuestionInstance> load_dataset(const std::string& path, DatasetFormat format) {
  if (format == DatasetFormat::synthetic)
    throw ValidationError("synthetic datasets are generated, not loaded from JSONL");
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot open dataset file '" + path + "'");
  std::vector<QuestionInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    try {
      json j = json::parse(line);
      switch (format) {
      case DatasetFormat::gsm8k_jsonl:
        out.push_back(parse_gsm8k(j, line_no));
        break;
      case DatasetFormat::arc_jsonl:
        out.push_back(parse_arc(j, line_no));
        break;
      case DatasetFormat::svamp_jsonl:
        out.push_back(parse_svamp(j, line_no));
        break;
      default:
        break;
      }
    } catch (const json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

} // namespace sia
