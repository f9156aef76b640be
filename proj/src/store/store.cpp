// Copyright 2026 The Convex Authors.
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

#include "convex/store/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <random>

#include "convex/common/files.hpp"
#include "convex/executor/executor.hpp"

namespace convex::store {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class LockFile {
 public:
  explicit LockFile(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) throw IoError("cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw IoError("cannot lock " + path.string());
    }
  }
  ~LockFile() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  int fd_ = -1;
};

json parse_file(const fs::path& path, const std::string& label) {
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const IoError&) {
    throw NotFoundError(label + " not found");
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorruptError(path.filename().string(), "$",
                       "parse error at byte " + std::to_string(e.byte));
  }
}

void check_version(const json& j, const fs::path& path) {
  if (!j.is_object() || !j.contains("schema_version")) {
    throw CorruptError(path.filename().string(), "schema_version", "missing");
  }
  if (j["schema_version"] != kStoreSchemaVersion) {
    throw CorruptError(path.filename().string(), "schema_version",
                       "unsupported version " + j["schema_version"].dump());
  }
}

struct FieldRule {
  const char* name;
  json::value_t type;
  bool nullable;
};

std::optional<std::string> check_fields(const json& j, const std::string& path,
                                        std::initializer_list<FieldRule> rules) {
  if (!j.is_object()) return path;
  for (const auto& r : rules) {
    const std::string p = path + "." + r.name;
    if (!j.contains(r.name)) return p;
    const json& v = j[r.name];
    if (v.is_null() && r.nullable) continue;
    const bool number_ok = (r.type == json::value_t::number_unsigned ||
                            r.type == json::value_t::number_integer) &&
                           (v.is_number_integer());
    if (v.type() != r.type && !number_ok) return p;
  }
  return std::nullopt;
}

}  // namespace

CorruptError::CorruptError(std::string file, std::string field, const std::string& detail)
    : Error("corrupt", file + ": " + field + ": " + detail),
      file_(std::move(file)),
      field_(std::move(field)) {}

std::optional<std::string> session_schema_problem(const json& j) {
  using T = json::value_t;
  if (auto p = check_fields(j, "session",
                            {{"id", T::string, false},
                             {"status", T::string, false},
                             {"seed", T::number_unsigned, false},
                             {"plan", T::object, true},
                             {"turns", T::array, false},
                             {"artifacts", T::array, false},
                             {"next_artifact", T::number_unsigned, false},
                             {"completed_seq", T::number_integer, false},
                             {"dataset", T::object, true},
                             {"log", T::array, false},
                             {"pending", T::object, true},
                             {"suggestion", T::object, true}})) {
    return p;
  }
  for (size_t i = 0; i < j["turns"].size(); ++i) {
    if (auto p = check_fields(j["turns"][i], "session.turns[" + std::to_string(i) + "]",
                              {{"index", T::number_unsigned, false},
                               {"speaker", T::string, false},
                               {"text", T::string, false},
                               {"artifacts", T::array, false}})) {
      return p;
    }
  }
  for (size_t i = 0; i < j["artifacts"].size(); ++i) {
    if (auto p = check_fields(j["artifacts"][i], "session.artifacts[" + std::to_string(i) + "]",
                              {{"id", T::string, false},
                               {"kind", T::string, false},
                               {"sha256", T::string, false}})) {
      return p;
    }
  }
  return std::nullopt;
}

SessionStore::SessionStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "sessions");
}

std::string SessionStore::new_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uniform_int_distribution<uint64_t> dist;
  uint64_t hi = dist(rng), lo = dist(rng);
  hi = (hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;  // version 4
  lo = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;  // RFC 4122 variant
  char buf[37];
  std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx",
                static_cast<unsigned>(hi >> 32), static_cast<unsigned>((hi >> 16) & 0xffff),
                static_cast<unsigned>(hi & 0xffff), static_cast<unsigned>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xffffffffffffULL));
  return buf;
}

fs::path SessionStore::session_dir(const std::string& id) const {
  if (id.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos) {
    throw NotFoundError("invalid session id '" + id + "'");
  }
  return root_ / "sessions" / id;
}

fs::path SessionStore::artifact_path(const std::string& id, const executor::Artifact& a) const {
  return session_dir(id) / "artifacts" /
         (a.sha256 + "." + std::string(executor::extension(a.kind)));
}

void SessionStore::save(const executor::Session& s) {
  const fs::path dir = session_dir(s.id);
  fs::create_directories(dir / "artifacts");
  for (const auto& a : s.artifacts) {
    fs::path p = artifact_path(s.id, a);
    if (!fs::exists(p)) write_file_atomic(p.string(), s.payload(a));
  }
  if (s.dataset) {
    fs::path p = dir / "artifacts" / (s.dataset->blob + ".bin");
    if (!fs::exists(p)) write_file_atomic(p.string(), s.blobs.at(s.dataset->blob));
  }
  if (s.story_artifact) {
    write_file_atomic((dir / "story.md").string(), s.payload(s.require_artifact(*s.story_artifact)));
  }
  const json body = executor::session_to_json(s);
  if (s.status == executor::SessionStatus::Paused) {
    json snap = {{"schema_version", executor::kSnapshotVersion}, {"kind", "snapshot"},
                 {"session", body}};
    write_file_atomic((dir / "snapshot.json").string(), snap.dump(2));
  } else if (fs::exists(dir / "snapshot.json")) {
    fs::remove(dir / "snapshot.json");
  }
  json doc = {{"schema_version", kStoreSchemaVersion}, {"kind", "session"}, {"session", body}};
  write_file_atomic((dir / "session.json").string(), doc.dump(2));
  if (s.status == executor::SessionStatus::Completed ||
      s.status == executor::SessionStatus::Abandoned) {
    rebuild_history();
  }
}

std::map<std::string, std::string> SessionStore::read_blobs(const executor::Session& s) const {
  std::map<std::string, std::string> blobs;
  const fs::path dir = session_dir(s.id) / "artifacts";
  auto load = [&](const std::string& sha, std::string_view ext) {
    fs::path p = dir / (sha + "." + std::string(ext));
    try {
      blobs.emplace(sha, read_file(p.string()));
    } catch (const IoError&) {
      throw CorruptError("artifacts/" + p.filename().string(), "$", "payload missing");
    }
  };
  for (const auto& a : s.artifacts) load(a.sha256, executor::extension(a.kind));
  if (s.dataset) load(s.dataset->blob, "bin");
  return blobs;
}

executor::Session SessionStore::load(const std::string& id) const {
  const fs::path path = session_dir(id) / "session.json";
  if (!fs::exists(path)) throw NotFoundError("session " + id + " not found");
  json doc = parse_file(path, "session " + id);
  check_version(doc, path);
  if (!doc.contains("session")) throw CorruptError("session.json", "session", "missing");
  if (auto problem = session_schema_problem(doc["session"])) {
    throw CorruptError("session.json", *problem, "missing or of the wrong type");
  }
  executor::Session s;
  try {
    s = executor::session_from_json(doc["session"]);
  } catch (const Error& e) {
    throw CorruptError("session.json", "session", e.what());
  }
  s.blobs = read_blobs(s);
  return s;
}

bool SessionStore::exists(const std::string& id) const {
  return fs::exists(session_dir(id) / "session.json");
}

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(root_ / "sessions")) {
    if (fs::exists(e.path() / "session.json")) out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

json SessionStore::load_snapshot(const std::string& id) const {
  const fs::path path = session_dir(id) / "snapshot.json";
  if (!exists(id)) throw NotFoundError("session " + id + " not found");
  if (!fs::exists(path)) throw NotFoundError("session " + id + " has no snapshot");
  return parse_file(path, "snapshot of " + id);
}

executor::Session SessionStore::resume(const std::string& id) const {
  json snap = load_snapshot(id);
  executor::Session shell = executor::session_from_json(snap.at("session"));
  return executor::resume(snap, read_blobs(shell));
}

dialogue::UserProfile SessionStore::load_profile(const std::string& user_id) const {
  const fs::path path = root_ / "profiles.json";
  dialogue::UserProfile p;
  p.user_id = user_id;
  if (!fs::exists(path)) return p;
  json j = parse_file(path, "profiles");
  check_version(j, path);
  if (j.contains("profiles") && j["profiles"].contains(user_id)) {
    try {
      return dialogue::profile_from_json(j["profiles"][user_id]);
    } catch (const json::exception& e) {
      throw CorruptError("profiles.json", "profiles." + user_id, e.what());
    }
  }
  return p;
}

void SessionStore::save_profile(const dialogue::UserProfile& profile) {
  LockFile lock(root_ / ".lock");
  const fs::path path = root_ / "profiles.json";
  json j = {{"schema_version", kStoreSchemaVersion}, {"profiles", json::object()}};
  if (fs::exists(path)) {
    j = parse_file(path, "profiles");
    check_version(j, path);
  }
  j["profiles"][profile.user_id] = dialogue::to_json(profile);
  write_file_atomic(path.string(), j.dump(2));
}

json SessionStore::history_json() const {
  struct Entry {
    std::string last;
    std::string id;
    dialogue::HistoryRecord rec;
  };
  std::vector<Entry> entries;
  for (const auto& id : list()) {
    json doc = parse_file(session_dir(id) / "session.json", "session " + id);
    const json& s = doc.at("session");
    const std::string status = s.value("status", "");
    if (status != "completed" && status != "abandoned") continue;
    executor::Session shell = executor::session_from_json(s);
    Entry e;
    e.id = id;
    e.last = shell.turns.empty() ? "" : shell.turns.back().timestamp;
    e.rec.session_id = id;
    e.rec.ops = executor::executed_ops(shell);
    e.rec.offered = shell.suggestions_offered;
    e.rec.accepted = shell.suggestions_accepted;
    entries.push_back(std::move(e));
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.last, a.id) < std::tie(b.last, b.id);
  });
  json out = {{"schema_version", kStoreSchemaVersion}, {"sessions", json::array()}};
  uint64_t seq = 0;
  for (const auto& e : entries) {
    out["sessions"].push_back({{"session_id", e.id},
                               {"ops", e.rec.ops},
                               {"offered", e.rec.offered},
                               {"accepted", e.rec.accepted},
                               {"sequence", ++seq}});
  }
  return out;
}

void SessionStore::rebuild_history() {
  LockFile lock(root_ / ".lock");
  write_file_atomic((root_ / "history.json").string(), history_json().dump(2));
}

std::vector<dialogue::HistoryRecord> SessionStore::history() const {
  const fs::path path = root_ / "history.json";
  std::vector<dialogue::HistoryRecord> out;
  if (!fs::exists(path)) return out;
  json j = parse_file(path, "history");
  check_version(j, path);
  try {
    for (const auto& e : j.at("sessions")) {
      out.push_back({e.at("session_id").get<std::string>(),
                     e.at("ops").get<std::vector<std::string>>(),
                     e.at("offered").get<std::map<std::string, int>>(),
                     e.at("accepted").get<std::map<std::string, int>>(),
                     e.at("sequence").get<uint64_t>()});
    }
  } catch (const json::exception& e) {
    throw CorruptError("history.json", "sessions", e.what());
  }
  return out;
}

std::vector<std::pair<std::string, double>> SessionStore::query_history(
    const std::vector<std::string>& ops) const {
  return dialogue::rank_history(history(), ops);
}

std::vector<executor::Session> SessionStore::load_all() const {
  std::vector<executor::Session> out;
  for (const auto& id : list()) out.push_back(load(id));
  return out;
}

void SessionStore::save_survey(const std::string& id, const metrics::Survey& survey) {
  if (!exists(id)) throw NotFoundError("session " + id + " not found");
  json doc = metrics::to_json(survey);
  doc["schema_version"] = kStoreSchemaVersion;
  write_file_atomic((session_dir(id) / "survey.json").string(), doc.dump(2));
}

std::vector<metrics::Survey> SessionStore::surveys() const {
  std::vector<metrics::Survey> out;
  for (const auto& id : list()) {
    const fs::path path = session_dir(id) / "survey.json";
    if (!fs::exists(path)) continue;
    json j = parse_file(path, "survey of " + id);
    check_version(j, path);
    try {
      out.push_back(metrics::survey_from_json(j));
    } catch (const std::exception& e) {
      throw CorruptError("survey.json", "$", e.what());
    }
  }
  return out;
}

}  // namespace convex::store
