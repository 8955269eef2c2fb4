// Copyright 2026 The tsqa Authors.
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

#include "tsqa/timeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "tsqa/error.hpp"

namespace tsqa {
namespace {

constexpr std::string_view kFeaturePrefix = "f:";
constexpr std::string_view kLabelPrefix = "label:";

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::string row_ref(std::size_t line_no) { return "row " + std::to_string(line_no); }

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

struct Column {
  enum class Kind { kTimestamp, kUser, kFeature, kLabel } kind;
  std::size_t modality = 0;
  std::size_t component = 0;
  std::string label;
};

std::vector<Column> parse_header(std::string_view header, const ModalitySchema& schema) {
  std::vector<Column> columns;
  std::set<std::string_view> seen;
  bool has_ts = false;
  bool has_user = false;
  std::vector<std::vector<bool>> covered(schema.size());
  for (std::size_t m = 0; m < schema.size(); ++m) covered[m].assign(schema[m].dim, false);

  for (std::string_view name : split_commas(header)) {
    if (!seen.insert(name).second) {
      throw Error(ErrorCode::kSchema, "duplicate column '" + std::string(name) + "'");
    }
    if (name == "timestamp") {
      columns.push_back({Column::Kind::kTimestamp, 0, 0, {}});
      has_ts = true;
    } else if (name == "user_id") {
      columns.push_back({Column::Kind::kUser, 0, 0, {}});
      has_user = true;
    } else if (name.starts_with(kFeaturePrefix)) {
      std::string_view rest = name.substr(kFeaturePrefix.size());
      std::size_t colon = rest.rfind(':');
      if (colon == std::string_view::npos) {
        throw Error(ErrorCode::kSchema, "feature column '" + std::string(name) + "' lacks a component index");
      }
      std::string_view modality = rest.substr(0, colon);
      std::string_view index = rest.substr(colon + 1);
      auto m = schema.find(modality);
      if (!m) {
        throw Error(ErrorCode::kSchema, "feature column '" + std::string(name) + "' names unknown modality");
      }
      std::size_t k = 0;
      auto [ptr, ec] = std::from_chars(index.data(), index.data() + index.size(), k);
      if (ec != std::errc() || ptr != index.data() + index.size() ||
          k >= static_cast<std::size_t>(schema[*m].dim)) {
        throw Error(ErrorCode::kSchema, "feature column '" + std::string(name) + "' has an invalid component index");
      }
      covered[*m][k] = true;
      columns.push_back({Column::Kind::kFeature, *m, k, {}});
    } else if (name.starts_with(kLabelPrefix)) {
      std::string phrase(name.substr(kLabelPrefix.size()));
      if (phrase.empty()) throw Error(ErrorCode::kSchema, "empty label column name");
      columns.push_back({Column::Kind::kLabel, 0, 0, std::move(phrase)});
    } else {
      throw Error(ErrorCode::kFormat, "unknown column '" + std::string(name) + "'");
    }
  }
  if (!has_ts || !has_user) {
    throw Error(ErrorCode::kSchema, "header must contain 'timestamp' and 'user_id' columns");
  }
  for (std::size_t m = 0; m < schema.size(); ++m) {
    for (std::size_t k = 0; k < covered[m].size(); ++k) {
      if (!covered[m][k]) {
        throw Error(ErrorCode::kSchema, "missing feature column f:" + schema[m].name + ":" + std::to_string(k));
      }
    }
  }
  return columns;
}

}  // namespace

// ---------------------------------------------------------------------------
// ModalitySchema

ModalitySchema::ModalitySchema(std::vector<Modality> modalities) : modalities_(std::move(modalities)) {
  if (modalities_.empty()) throw Error(ErrorCode::kSchema, "schema has no modalities");
  std::set<std::string> names;
  for (const Modality& m : modalities_) {
    if (m.name.empty()) throw Error(ErrorCode::kSchema, "modality name is empty");
    if (m.name.find(',') != std::string::npos) {
      throw Error(ErrorCode::kSchema, "modality name '" + m.name + "' contains a comma");
    }
    if (m.dim < 1) throw Error(ErrorCode::kSchema, "modality '" + m.name + "' has dim < 1");
    if (!names.insert(m.name).second) throw Error(ErrorCode::kSchema, "duplicate modality '" + m.name + "'");
  }
}

int ModalitySchema::total_dim() const {
  int d = 0;
  for (const Modality& m : modalities_) d += m.dim;
  return d;
}

std::optional<std::size_t> ModalitySchema::find(std::string_view name) const {
  for (std::size_t i = 0; i < modalities_.size(); ++i) {
    if (modalities_[i].name == name) return i;
  }
  return std::nullopt;
}

ModalitySchema ModalitySchema::from_json(const nlohmann::json& j) {
  try {
    std::vector<Modality> mods;
    for (const auto& m : j.at("modalities")) {
      mods.push_back({m.at("name").get<std::string>(), m.at("dim").get<int>()});
    }
    return ModalitySchema(std::move(mods));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("invalid schema document: ") + e.what());
  }
}

nlohmann::json ModalitySchema::to_json() const {
  nlohmann::json mods = nlohmann::json::array();
  for (const Modality& m : modalities_) mods.push_back({{"name", m.name}, {"dim", m.dim}});
  return {{"modalities", mods}};
}

ModalitySchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open schema " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchema, "schema " + path.string() + " is not valid JSON: " + e.what());
  }
  return ModalitySchema::from_json(j);
}

// ---------------------------------------------------------------------------
// SensorWindow / Timeline

bool SensorWindow::has_label(std::string_view phrase) const {
  return std::binary_search(labels.begin(), labels.end(), phrase);
}

bool SensorWindow::operator==(const SensorWindow& other) const {
  if (timestamp != other.timestamp || user_id != other.user_id || missing != other.missing ||
      labels != other.labels || features.size() != other.features.size()) {
    return false;
  }
  for (std::size_t m = 0; m < features.size(); ++m) {
    if (features[m].size() != other.features[m].size()) return false;
    for (std::size_t k = 0; k < features[m].size(); ++k) {
      double a = features[m][k];
      double b = other.features[m][k];
      if (std::isnan(a) != std::isnan(b)) return false;
      if (!std::isnan(a) && a != b) return false;
    }
  }
  return true;
}

std::vector<std::string> Timeline::users() const {
  std::vector<std::string> out;
  for (const SensorWindow& w : windows) {
    if (out.empty() || out.back() != w.user_id) out.push_back(w.user_id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// LabelVocabulary

LabelVocabulary::LabelVocabulary(std::vector<std::string> phrases) : phrases_(std::move(phrases)) {
  sorted_.resize(phrases_.size());
  for (std::size_t i = 0; i < sorted_.size(); ++i) sorted_[i] = static_cast<int>(i);
  std::sort(sorted_.begin(), sorted_.end(), [&](int a, int b) { return phrases_[a] < phrases_[b]; });
  for (std::size_t i = 1; i < sorted_.size(); ++i) {
    if (phrases_[sorted_[i]] == phrases_[sorted_[i - 1]]) {
      throw Error(ErrorCode::kVocabulary, "duplicate label phrase '" + phrases_[sorted_[i]] + "'");
    }
  }
}

std::optional<int> LabelVocabulary::index_of(std::string_view phrase) const {
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), phrase,
                             [&](int i, std::string_view p) { return phrases_[i] < p; });
  if (it != sorted_.end() && phrases_[*it] == phrase) return *it;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// CSV

Timeline parse_csv(std::istream& in, const ModalitySchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kSchema, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.empty()) throw Error(ErrorCode::kSchema, "empty header row");
  const std::vector<Column> columns = parse_header(line, schema);

  Timeline timeline;
  timeline.schema = schema;
  std::unordered_map<std::string, std::int64_t> last_ts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields = split_commas(line);
    if (fields.size() != columns.size()) {
      throw Error(ErrorCode::kFormat, row_ref(line_no) + ": expected " + std::to_string(columns.size()) +
                                          " fields, got " + std::to_string(fields.size()));
    }
    SensorWindow w;
    w.features.resize(schema.size());
    w.missing.assign(schema.size(), false);
    for (std::size_t m = 0; m < schema.size(); ++m) {
      w.features[m].assign(schema[m].dim, std::numeric_limits<double>::quiet_NaN());
    }
    std::vector<int> empty_cells(schema.size(), 0);

    for (std::size_t c = 0; c < columns.size(); ++c) {
      const Column& col = columns[c];
      std::string_view v = fields[c];
      switch (col.kind) {
        case Column::Kind::kTimestamp: {
          auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), w.timestamp);
          if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
            throw Error(ErrorCode::kFormat, row_ref(line_no) + ": invalid timestamp '" + std::string(v) + "'");
          }
          break;
        }
        case Column::Kind::kUser:
          if (v.empty()) throw Error(ErrorCode::kFormat, row_ref(line_no) + ": empty user_id");
          w.user_id = std::string(v);
          break;
        case Column::Kind::kFeature: {
          if (v.empty()) {
            ++empty_cells[col.modality];
            break;
          }
          double x = 0.0;
          auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
          if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(x)) {
            throw Error(ErrorCode::kFormat, row_ref(line_no) + ": invalid feature value '" + std::string(v) + "'");
          }
          w.features[col.modality][col.component] = x;
          break;
        }
        case Column::Kind::kLabel:
          if (v == "1") {
            w.labels.push_back(col.label);
          } else if (!v.empty() && v != "0") {
            throw Error(ErrorCode::kFormat, row_ref(line_no) + ": label value must be 0, 1 or empty");
          }
          break;
      }
    }
    for (std::size_t m = 0; m < schema.size(); ++m) {
      if (2 * empty_cells[m] >= schema[m].dim) {
        w.missing[m] = true;
        std::fill(w.features[m].begin(), w.features[m].end(), std::numeric_limits<double>::quiet_NaN());
      }
    }
    std::sort(w.labels.begin(), w.labels.end());

    auto [it, inserted] = last_ts.try_emplace(w.user_id, w.timestamp);
    if (!inserted) {
      if (w.timestamp == it->second) {
        throw Error(ErrorCode::kDuplicate, row_ref(line_no) + ": duplicate (user_id, timestamp) (" + w.user_id +
                                               ", " + std::to_string(w.timestamp) + ")");
      }
      if (w.timestamp < it->second) {
        throw Error(ErrorCode::kOrdering, row_ref(line_no) + ": timestamp " + std::to_string(w.timestamp) +
                                              " is not after the previous one for user " + w.user_id);
      }
      it->second = w.timestamp;
    }
    timeline.windows.push_back(std::move(w));
  }
  std::stable_sort(timeline.windows.begin(), timeline.windows.end(),
                   [](const SensorWindow& a, const SensorWindow& b) { return a.user_id < b.user_id; });
  return timeline;
}

Timeline load_csv(const std::filesystem::path& path, const ModalitySchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_csv(in, schema);
}

void write_csv(std::ostream& out, const Timeline& timeline, std::span<const std::string> label_columns) {
  const ModalitySchema& schema = timeline.schema;
  std::vector<std::string> labels(label_columns.begin(), label_columns.end());
  if (labels.empty()) {
    std::set<std::string> all;
    for (const SensorWindow& w : timeline.windows) all.insert(w.labels.begin(), w.labels.end());
    labels.assign(all.begin(), all.end());
  }
  out << "timestamp,user_id";
  for (const Modality& m : schema.modalities()) {
    for (int k = 0; k < m.dim; ++k) out << ",f:" << m.name << ':' << k;
  }
  for (const std::string& l : labels) out << ",label:" << l;
  out << '\n';
  for (const SensorWindow& w : timeline.windows) {
    out << w.timestamp << ',' << w.user_id;
    for (std::size_t m = 0; m < schema.size(); ++m) {
      for (double x : w.features[m]) {
        out << ',';
        if (!std::isnan(x)) out << format_double(x);
      }
    }
    for (const std::string& l : labels) out << ',' << (w.has_label(l) ? '1' : '0');
    out << '\n';
  }
}

LabelVocabulary build_vocabulary(const Timeline& timeline) {
  if (timeline.empty()) throw Error(ErrorCode::kVocabulary, "cannot build a vocabulary from an empty timeline");
  std::set<std::string> phrases;
  for (const SensorWindow& w : timeline.windows) phrases.insert(w.labels.begin(), w.labels.end());
  if (phrases.size() < 2) {
    throw Error(ErrorCode::kVocabulary, "need at least 2 distinct label phrases, found " +
                                            std::to_string(phrases.size()));
  }
  return LabelVocabulary(std::vector<std::string>(phrases.begin(), phrases.end()));
}

Timeline impute_missing(Timeline timeline) {
  if (timeline.empty()) return timeline;
  const std::size_t n_mod = timeline.windows.front().features.size();

  struct Accum {
    std::vector<std::vector<double>> sum;
    std::vector<std::vector<long>> count;
  };
  auto make_accum = [&] {
    Accum a;
    a.sum.resize(n_mod);
    a.count.resize(n_mod);
    for (std::size_t m = 0; m < n_mod; ++m) {
      a.sum[m].assign(timeline.windows.front().features[m].size(), 0.0);
      a.count[m].assign(timeline.windows.front().features[m].size(), 0);
    }
    return a;
  };

  Accum global = make_accum();
  std::map<std::string, Accum> per_user;
  bool any_missing = false;
  for (const SensorWindow& w : timeline.windows) {
    auto [it, _] = per_user.try_emplace(w.user_id, Accum{});
    if (it->second.sum.empty()) it->second = make_accum();
    for (std::size_t m = 0; m < n_mod; ++m) {
      for (std::size_t k = 0; k < w.features[m].size(); ++k) {
        double x = w.features[m][k];
        if (std::isnan(x)) {
          any_missing = true;
          continue;
        }
        global.sum[m][k] += x;
        ++global.count[m][k];
        it->second.sum[m][k] += x;
        ++it->second.count[m][k];
      }
    }
  }
  if (!any_missing) return timeline;

  for (SensorWindow& w : timeline.windows) {
    const Accum& user = per_user.at(w.user_id);
    for (std::size_t m = 0; m < n_mod; ++m) {
      for (std::size_t k = 0; k < w.features[m].size(); ++k) {
        if (!std::isnan(w.features[m][k])) continue;
        if (user.count[m][k] > 0) {
          w.features[m][k] = user.sum[m][k] / static_cast<double>(user.count[m][k]);
        } else if (global.count[m][k] > 0) {
          w.features[m][k] = global.sum[m][k] / static_cast<double>(global.count[m][k]);
        } else {
          std::string name = m < timeline.schema.size() ? timeline.schema[m].name : "#" + std::to_string(m);
          throw Error(ErrorCode::kImputation, "modality '" + name + "' component " + std::to_string(k) +
                                                  " is missing in every window");
        }
      }
    }
  }
  return timeline;
}

}  // namespace tsqa
