#include "crpo/jsonl.hpp"

namespace crpo {

size_t for_each_line(std::istream& in,
                     const std::function<void(size_t, const std::string&)>& fn) {
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        fn(line_no, line);
    }
    return line_no;
}

ordered_json parse_object_line(size_t line_no, const std::string& line) {
    ordered_json obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw LineError(line_no, "malformed JSON");
    if (!obj.is_object()) throw LineError(line_no, "expected a JSON object");
    return obj;
}

void write_jsonl_line(std::ostream& out, const json& obj) {
    out << obj.dump() << '\n';
}

void write_jsonl_line(std::ostream& out, const ordered_json& obj) {
    out << obj.dump() << '\n';
}

}  // namespace crpo
