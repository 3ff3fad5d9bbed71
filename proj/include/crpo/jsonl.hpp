#pragma once

#include <functional>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

namespace crpo {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Thrown by line-oriented parsers; carries the 1-based line number.
struct LineError : std::runtime_error {
    size_t line;
    LineError(size_t line_no, const std::string& what)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + what),
          line(line_no) {}
};

// Calls fn(line_no, raw_line) for every non-empty line. Returns line count.
size_t for_each_line(std::istream& in,
                     const std::function<void(size_t, const std::string&)>& fn);

// Parses one JSONL line as an object; throws LineError on malformed input.
ordered_json parse_object_line(size_t line_no, const std::string& line);

void write_jsonl_line(std::ostream& out, const json& obj);
void write_jsonl_line(std::ostream& out, const ordered_json& obj);

}  // namespace crpo
