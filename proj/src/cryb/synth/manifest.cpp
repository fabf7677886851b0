// Copyright 2026 The cryb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cryb/synth/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cryb/common/container.hpp"
#include "cryb/common/error.hpp"

namespace cryb::synth {
namespace {

constexpr char kHeader[] = "path,label,subject_id,split";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

const char* split_name(SplitName s) noexcept {
  switch (s) {
    case SplitName::Train: return "train";
    case SplitName::Val: return "val";
    case SplitName::Test: return "test";
  }
  return "?";
}

std::optional<SplitName> parse_split(std::string_view text) {
  if (text == "train") return SplitName::Train;
  if (text == "val") return SplitName::Val;
  if (text == "test") return SplitName::Test;
  return std::nullopt;
}

int Manifest::class_count() const {
  int k = 0;
  for (const auto& r : rows) k = std::max(k, r.label + 1);
  return k;
}

std::vector<std::string> Manifest::subjects() const {
  std::set<std::string> s;
  for (const auto& r : rows) s.insert(r.subject_id);
  return {s.begin(), s.end()};
}

bool Manifest::has_explicit_splits() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const ManifestRow& r) { return r.split.has_value(); });
}

void Manifest::validate() const {
  std::set<std::string> paths;
  for (const auto& r : rows) {
    require(r.label >= 0, Errc::InvalidArgument, "negative label for " + r.path);
    require(!r.subject_id.empty(), Errc::InvalidArgument, "empty subject_id for " + r.path);
    require(paths.insert(r.path).second, Errc::InvalidArgument, "duplicate manifest path " + r.path);
  }
}

std::string format_manifest_csv(const Manifest& manifest) {
  std::ostringstream out;
  out << kHeader << '\n';
  for (const auto& r : manifest.rows)
    out << csv_field(r.path) << ',' << r.label << ',' << csv_field(r.subject_id) << ','
        << (r.split ? split_name(*r.split) : "") << '\n';
  return out.str();
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  write_file_bytes(path, format_manifest_csv(manifest));
}

Manifest read_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(Errc::Io, "manifest not found: " + path.string());
  std::istringstream in(read_file_bytes(path));
  std::string line;
  if (!std::getline(in, line)) fail(Errc::InvalidArgument, "empty manifest " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) fail(Errc::InvalidArgument, "manifest header must be '" + std::string(kHeader) + "'");

  Manifest m;
  m.base_dir = path.parent_path();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 4) fail(Errc::InvalidArgument, "expected 4 fields at " + where);
    ManifestRow row;
    row.path = fields[0];
    try {
      std::size_t used = 0;
      row.label = std::stoi(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail(Errc::InvalidArgument, "bad label '" + fields[1] + "' at " + where);
    }
    row.subject_id = fields[2];
    if (!fields[3].empty()) {
      row.split = parse_split(fields[3]);
      if (!row.split) fail(Errc::InvalidArgument, "bad split '" + fields[3] + "' at " + where);
    }
    m.rows.push_back(std::move(row));
  }
  m.validate();
  return m;
}

}  // namespace cryb::synth
