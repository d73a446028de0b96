#pragma once

// File plumbing: 17-significant-digit JSON output, JSON Lines, CSV cells and
// write-then-rename so a crash never leaves a half-written artifact in place.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cellsleep/errors.hpp"

namespace cellsleep {

using Json = nlohmann::json;
namespace fs = std::filesystem;

inline std::string format_double(double v) {
  if (!std::isfinite(v)) throw ValidationError("cannot serialize non-finite number");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline void write_json(const Json& j, std::string& out, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        write_json(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // numeric arrays stay on one line even when pretty printing
      bool flat = true;
      for (const auto& v : j) flat = flat && !v.is_structured();
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += flat && indent >= 0 ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        write_json(v, out, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace detail

// indent < 0 gives the compact single-line form used for JSON Lines.
inline std::string to_json_text(const Json& j, int indent = -1) {
  std::string out;
  detail::write_json(j, out, indent, 0);
  return out;
}

inline std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + p.string());
  return ss.str();
}

inline void write_atomic(const fs::path& p, const std::string& content) {
  std::error_code ec;
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
  }
  fs::path tmp = p;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, p, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

inline Json read_json(const fs::path& p) {
  const std::string text = read_text(p);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ArtifactError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

inline void write_json_file(const fs::path& p, const Json& j) { write_atomic(p, to_json_text(j, 2) + "\n"); }

inline std::vector<Json> read_jsonl(const fs::path& p) {
  std::istringstream in(read_text(p));
  std::vector<Json> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw ArtifactError(p.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

inline void write_jsonl(const fs::path& p, const std::vector<Json>& rows) {
  std::string text;
  for (const auto& r : rows) {
    text += to_json_text(r);
    text += '\n';
  }
  write_atomic(p, text);
}

}  // namespace cellsleep
