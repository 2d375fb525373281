/*
 * Copyright 2026 The rankaudit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Reading and writing ranked-list logs.
//
// JSONL: one query per line,
//   {"query_id": "...", "candidates": [{"rank": 1, "group": "F",
//     "outcome": 0.5, "features": {"k": "v"}}, ...]}
//
// CSV (long form): header query_id,rank,group,outcome[,feature:<name>...],
// one row per candidate. Other columns are ignored with a warning.

#ifndef RANKAUDIT_IO_HPP_
#define RANKAUDIT_IO_HPP_

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "json.hpp"

#include "rankaudit/model.hpp"

namespace rankaudit {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataFormat { Jsonl, Csv };

struct IngestResult {
  Dataset dataset;
  std::vector<std::string> warnings;
};

namespace detail {

// Splits one CSV record. Supports double-quoted fields with "" escapes;
// embedded newlines are not supported.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(where + ": cannot parse number '" + std::string(s) + "'");
  }
  if (!std::isfinite(v)) throw ParseError(where + ": non-finite outcome");
  return v;
}

inline long long parse_rank(std::string_view s, const std::string& where) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(where + ": cannot parse rank '" + std::string(s) + "'");
  }
  return v;
}

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Collects (rank, entry) rows per query and checks ranks are exactly 1..J.
class QueryAssembler {
 public:
  void add(const std::string& query_id, long long rank, Entry entry) {
    auto [it, inserted] = index_.try_emplace(query_id, rows_.size());
    if (inserted) rows_.push_back({query_id, {}});
    auto& by_rank = rows_[it->second].second;
    if (rank < 1) {
      throw ParseError("query '" + query_id + "': rank " + std::to_string(rank) + " is below 1");
    }
    if (!by_rank.emplace(rank, std::move(entry)).second) {
      throw ParseError("query '" + query_id + "': duplicate rank " + std::to_string(rank));
    }
  }

  Dataset finish() {
    std::vector<QueryRecord> queries;
    queries.reserve(rows_.size());
    for (auto& [id, by_rank] : rows_) {
      std::vector<Entry> entries;
      long long expected = 1;
      for (auto& [rank, entry] : by_rank) {
        if (rank != expected) {
          throw ParseError("query '" + id + "': gap in ranks, missing rank " + std::to_string(expected));
        }
        entries.push_back(std::move(entry));
        ++expected;
      }
      queries.emplace_back(id, std::move(entries));
    }
    return Dataset(std::move(queries));
  }

 private:
  std::map<std::string, std::size_t> index_;
  std::vector<std::pair<std::string, std::map<long long, Entry>>> rows_;
};

inline std::string json_scalar_to_string(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace detail

inline IngestResult read_jsonl(std::istream& in) {
  IngestResult result;
  detail::QueryAssembler assembler;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("query_id") || !obj.contains("candidates") ||
        !obj["candidates"].is_array()) {
      throw ParseError(where + ": expected {\"query_id\", \"candidates\": [...]}");
    }
    const std::string qid = detail::json_scalar_to_string(obj["query_id"]);
    if (obj["candidates"].empty()) throw ParseError(where + ": query '" + qid + "' has no candidates");
    for (const auto& c : obj["candidates"]) {
      if (!c.is_object() || !c.contains("rank") || !c.contains("group") || !c.contains("outcome")) {
        throw ParseError(where + ": candidate needs rank, group, outcome");
      }
      if (!c["rank"].is_number_integer()) throw ParseError(where + ": rank must be an integer");
      if (!c["outcome"].is_number()) throw ParseError(where + ": outcome must be a number");
      Entry e;
      e.group = detail::json_scalar_to_string(c["group"]);
      e.outcome = c["outcome"].get<double>();
      if (!std::isfinite(e.outcome)) throw ParseError(where + ": non-finite outcome");
      if (c.contains("features")) {
        if (!c["features"].is_object()) throw ParseError(where + ": features must be an object");
        for (const auto& [k, v] : c["features"].items()) {
          e.features[k] = detail::json_scalar_to_string(v);
        }
      }
      assembler.add(qid, c["rank"].get<long long>(), std::move(e));
    }
  }
  result.dataset = assembler.finish();
  return result;
}

inline IngestResult read_csv(std::istream& in) {
  IngestResult result;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("csv: empty input");
  const auto header = detail::split_csv_line(line);
  int col_query = -1, col_rank = -1, col_group = -1, col_outcome = -1;
  std::vector<std::pair<int, std::string>> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& h = header[i];
    const int idx = static_cast<int>(i);
    if (h == "query_id") col_query = idx;
    else if (h == "rank") col_rank = idx;
    else if (h == "group") col_group = idx;
    else if (h == "outcome") col_outcome = idx;
    else if (h.rfind("feature:", 0) == 0) feature_cols.emplace_back(idx, h.substr(8));
    else result.warnings.push_back("csv: ignoring unknown column '" + h + "'");
  }
  if (col_query < 0 || col_rank < 0 || col_group < 0 || col_outcome < 0) {
    throw ParseError("csv: header must contain query_id,rank,group,outcome");
  }

  detail::QueryAssembler assembler;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "csv line " + std::to_string(line_no);
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(f.size()));
    }
    Entry e;
    e.group = f[static_cast<std::size_t>(col_group)];
    e.outcome = detail::parse_double(f[static_cast<std::size_t>(col_outcome)], where);
    for (const auto& [idx, name] : feature_cols) {
      const std::string& v = f[static_cast<std::size_t>(idx)];
      if (!v.empty()) e.features[name] = v;
    }
    assembler.add(f[static_cast<std::size_t>(col_query)],
                  detail::parse_rank(f[static_cast<std::size_t>(col_rank)], where), std::move(e));
  }
  result.dataset = assembler.finish();
  return result;
}

inline IngestResult ingest(std::istream& in, DataFormat format) {
  return format == DataFormat::Jsonl ? read_jsonl(in) : read_csv(in);
}

inline void write_jsonl(std::ostream& out, const Dataset& data) {
  for (const QueryRecord& q : data.queries()) {
    nlohmann::ordered_json obj;
    obj["query_id"] = q.id();
    auto& cands = obj["candidates"] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < q.size(); ++r) {
      const Entry& e = q.entries()[r];
      nlohmann::ordered_json c;
      c["rank"] = r + 1;
      c["group"] = e.group;
      c["outcome"] = e.outcome;
      if (!e.features.empty()) c["features"] = e.features;
      cands.push_back(std::move(c));
    }
    out << obj.dump() << '\n';
  }
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  std::vector<std::string> feature_names;
  {
    std::map<std::string, int> seen;
    for (const QueryRecord& q : data.queries()) {
      for (const Entry& e : q.entries()) {
        for (const auto& [k, v] : e.features) seen.emplace(k, 0);
      }
    }
    for (const auto& [k, v] : seen) feature_names.push_back(k);
  }
  out << "query_id,rank,group,outcome";
  for (const std::string& k : feature_names) out << "," << detail::csv_escape("feature:" + k);
  out << '\n';
  for (const QueryRecord& q : data.queries()) {
    for (std::size_t r = 0; r < q.size(); ++r) {
      const Entry& e = q.entries()[r];
      out << detail::csv_escape(q.id()) << "," << (r + 1) << "," << detail::csv_escape(e.group) << ","
          << detail::format_double(e.outcome);
      for (const std::string& k : feature_names) {
        auto it = e.features.find(k);
        out << "," << (it == e.features.end() ? "" : detail::csv_escape(it->second));
      }
      out << '\n';
    }
  }
}

}  // namespace rankaudit

#endif  // RANKAUDIT_IO_HPP_
