#include "ontonote/store.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdlib>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "ontonote/annotation.hpp"

namespace ontonote {

namespace fs = std::filesystem;

std::string utc_now() {
  static std::atomic<std::int64_t> last{0};
  const auto now = std::chrono::duration_cast<std::chrono::microseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  std::int64_t prev = last.load();
  std::int64_t next = 0;
  do {
    next = std::max<std::int64_t>(now, prev + 1);
  } while (!last.compare_exchange_weak(prev, next));

  const std::time_t secs = static_cast<std::time_t>(next / 1000000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<long long>(next % 1000000));
  return buf;
}

std::string_view directory_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::User: return "users";
    case EntityKind::Group: return "groups";
    case EntityKind::Document: return "documents";
    case EntityKind::Ontology: return "ontologies";
    case EntityKind::Activity: return "activities";
    case EntityKind::Annotation: return "annotations";
    case EntityKind::Grade: return "grades";
  }
  return "users";
}

std::string_view id_prefix(EntityKind kind) {
  switch (kind) {
    case EntityKind::User: return "usr";
    case EntityKind::Group: return "grp";
    case EntityKind::Document: return "doc";
    case EntityKind::Ontology: return "ont";
    case EntityKind::Activity: return "act";
    case EntityKind::Annotation: return "ann";
    case EntityKind::Grade: return "grd";
  }
  return "ent";
}

namespace {

constexpr EntityKind kAllKinds[] = {EntityKind::User,     EntityKind::Group,      EntityKind::Document,
                                    EntityKind::Ontology, EntityKind::Activity,   EntityKind::Annotation,
                                    EntityKind::Grade};

bool valid_id(std::string_view id) {
  if (id.empty() || id.size() > 200 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_' || c == '.';
  });
}

[[noreturn]] void io_fail(const std::string& what, const fs::path& p) {
  throw Error(ErrorCode::IoError, what + " " + p.string() + ": " + std::strerror(errno));
}

class EntityLock {
 public:
  explicit EntityLock(const fs::path& lock_path) {
    fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) io_fail("cannot open lock", lock_path);
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) {
        ::close(fd_);
        io_fail("cannot lock", lock_path);
      }
    }
  }
  ~EntityLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  EntityLock(const EntityLock&) = delete;
  EntityLock& operator=(const EntityLock&) = delete;

 private:
  int fd_ = -1;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) io_fail("cannot read", p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void fsync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

std::string temp_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  return ".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(counter++);
}

Envelope load_envelope(EntityKind kind, const fs::path& p) {
  const std::string text = read_file(p);
  try {
    return envelope_from_json(kind, Json::parse(text));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::IoError, "unreadable entity file " + p.string() + ": " + e.what());
  }
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& data) {
  const fs::path tmp = path.string() + temp_suffix();
  const int fd = ::open(tmp.c_str(), O_CREAT | O_WRONLY | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("cannot create", tmp);
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      ::unlink(tmp.c_str());
      io_fail("cannot write", tmp);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    ::unlink(tmp.c_str());
    io_fail("cannot flush", tmp);
  }
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    io_fail("cannot rename onto", path);
  }
  fsync_dir(path.parent_path());
}

Json envelope_to_json(const Envelope& e) {
  return Json{{"kind", directory_name(e.kind)},
              {"id", e.id},
              {"revision", e.revision},
              {"updated", e.updated},
              {"payload", e.payload}};
}

Envelope envelope_from_json(EntityKind kind, const Json& j) {
  Envelope e;
  e.kind = kind;
  e.id = j.at("id").get<std::string>();
  e.revision = j.at("revision").get<std::uint64_t>();
  e.updated = j.value("updated", "");
  e.payload = j.at("payload");
  return e;
}

void validate_payload(EntityKind kind, const Json& payload) {
  try {
    switch (kind) {
      case EntityKind::User: {
        const auto u = payload.get<User>();
        if (!valid_id(u.id)) throw Error(ErrorCode::Validation, "invalid user id");
        break;
      }
      case EntityKind::Group: {
        const auto g = payload.get<Group>();
        if (g.name.empty()) throw Error(ErrorCode::Validation, "group name must not be empty");
        break;
      }
      case EntityKind::Document:
        check_document(payload.get<Document>());
        break;
      case EntityKind::Ontology:
        validate(payload.get<Ontology>());
        break;
      case EntityKind::Activity:
        validate(payload.get<Activity>().snapshot);
        break;
      case EntityKind::Annotation: {
        const auto a = payload.get<Annotation>();
        if (a.classification.empty()) {
          throw Error(ErrorCode::EmptyClassification, "an annotation needs at least one final concept");
        }
        if (a.content.blocks.empty()) throw Error(ErrorCode::InvalidContent, "content needs at least one block");
        break;
      }
      case EntityKind::Grade: {
        const auto g = payload.get<GradeRecord>();
        make_grade(g.activity_id, g.student_id, g.grade, g.letter);
        break;
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Validation, std::string("malformed ") + std::string(directory_name(kind)) +
                                           " payload: " + e.what());
  }
}

Store::Store(fs::path root, Clock clock) : root_(std::move(root)), clock_(std::move(clock)) {
  std::error_code ec;
  for (const EntityKind kind : kAllKinds) {
    fs::create_directories(root_ / directory_name(kind), ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create store directory under " + root_.string() + ": " + ec.message());
  }
  recover();
}

fs::path Store::path_of(EntityKind kind, const std::string& id) const {
  return root_ / directory_name(kind) / (id + ".json");
}

std::string Store::fresh_id(EntityKind kind) const {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[24];
  std::snprintf(buf, sizeof buf, "%012llx", static_cast<unsigned long long>(rng() & 0xFFFFFFFFFFFFULL));
  return std::string(id_prefix(kind)) + "-" + buf;
}

void Store::write_envelope(const Envelope& e) const {
  write_file_atomic(path_of(e.kind, e.id), envelope_to_json(e).dump(2) + "\n");
}

Envelope Store::put_new(EntityKind kind, Json payload, std::optional<std::string> id) {
  if (id && !valid_id(*id)) throw Error(ErrorCode::Validation, "invalid id '" + *id + "'");
  for (int attempt = 0; attempt < 16; ++attempt) {
    const std::string candidate = id ? *id : fresh_id(kind);
    payload["id"] = candidate;
    validate_payload(kind, payload);

    const fs::path lock_path = root_ / directory_name(kind) / (candidate + ".lock");
    const EntityLock lock(lock_path);
    if (fs::exists(path_of(kind, candidate))) {
      if (id) throw Error(ErrorCode::AlreadyExists, std::string(directory_name(kind)) + " '" + candidate + "' exists");
      continue;
    }
    Envelope e{kind, candidate, 0, payload, clock_()};
    write_envelope(e);
    return e;
  }
  throw Error(ErrorCode::IoError, "could not allocate a fresh id");
}

Envelope Store::cas_update(EntityKind kind, const std::string& id, std::uint64_t expected, Json payload) {
  if (!valid_id(id)) throw Error(ErrorCode::NotFound, std::string(directory_name(kind)) + " '" + id + "' not found");
  payload["id"] = id;
  validate_payload(kind, payload);

  const EntityLock lock(root_ / directory_name(kind) / (id + ".lock"));
  const fs::path p = path_of(kind, id);
  if (!fs::exists(p)) throw Error(ErrorCode::NotFound, std::string(directory_name(kind)) + " '" + id + "' not found");
  Envelope current = load_envelope(kind, p);
  if (current.revision != expected) throw ConflictError(std::move(current));

  Envelope next{kind, id, expected + 1, std::move(payload), clock_()};
  write_envelope(next);
  return next;
}

void Store::put_verbatim(const Envelope& e) {
  if (!valid_id(e.id)) throw Error(ErrorCode::Validation, "invalid id '" + e.id + "'");
  validate_payload(e.kind, e.payload);
  const EntityLock lock(root_ / directory_name(e.kind) / (e.id + ".lock"));
  if (fs::exists(path_of(e.kind, e.id))) {
    throw Error(ErrorCode::AlreadyExists, std::string(directory_name(e.kind)) + " '" + e.id + "' exists");
  }
  write_envelope(e);
}

std::optional<Envelope> Store::get(EntityKind kind, const std::string& id) const {
  if (!valid_id(id)) return std::nullopt;
  const fs::path p = path_of(kind, id);
  if (!fs::exists(p)) return std::nullopt;
  return load_envelope(kind, p);
}

Envelope Store::require(EntityKind kind, const std::string& id) const {
  auto e = get(kind, id);
  if (!e) throw Error(ErrorCode::NotFound, std::string(directory_name(kind)) + " '" + id + "' not found");
  return std::move(*e);
}

std::vector<Envelope> Store::list(EntityKind kind) const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / directory_name(kind))) {
    const std::string name = entry.path().filename().string();
    if (name.size() <= 5 || name.compare(name.size() - 5, 5, ".json") != 0) continue;
    if (name.find(".tmp-") != std::string::npos) continue;
    ids.push_back(name.substr(0, name.size() - 5));
  }
  std::sort(ids.begin(), ids.end());
  std::vector<Envelope> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    // A concurrent writer may not have renamed yet; skip vanished files.
    if (auto e = get(kind, id)) out.push_back(std::move(*e));
  }
  return out;
}

void Store::append_log(EntityKind kind, const std::string& id, const Json& entry) {
  const fs::path p = root_ / directory_name(kind) / (id + ".log.jsonl");
  const std::string line = entry.dump() + "\n";
  const int fd = ::open(p.c_str(), O_CREAT | O_WRONLY | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("cannot open log", p);
  const ssize_t n = ::write(fd, line.data(), line.size());
  const bool ok = n == static_cast<ssize_t>(line.size()) && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) io_fail("cannot append to log", p);
}

std::vector<Json> Store::read_log(EntityKind kind, const std::string& id) const {
  std::vector<Json> out;
  if (!valid_id(id)) return out;
  const fs::path p = root_ / directory_name(kind) / (id + ".log.jsonl");
  if (!fs::exists(p)) return out;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::exception&) {
      break;  // torn final line from an interrupted append
    }
  }
  return out;
}

Json Store::once(const std::string& key, const std::function<Json()>& produce) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (const unsigned char c : key) h = (h ^ c) * 1099511628211ULL;
  char name[24];
  std::snprintf(name, sizeof name, "%016llx", static_cast<unsigned long long>(h));
  const fs::path dir = root_ / "idempotency";
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  const EntityLock lock(dir / (std::string(name) + ".lock"));
  const fs::path p = dir / (std::string(name) + ".json");
  if (fs::exists(p)) {
    try {
      Json stored = Json::parse(read_file(p));
      if (stored.value("key", "") == key) return stored.at("record");
    } catch (const Json::exception&) {
    }
  }
  Json record = produce();
  // A hash collision with a different key just means this one is not cached.
  if (!fs::exists(p)) write_file_atomic(p, Json{{"key", key}, {"record", record}}.dump() + "\n");
  return record;
}

RecoveryReport Store::recover() {
  RecoveryReport report;
  for (const EntityKind kind : kAllKinds) {
    for (const auto& entry : fs::directory_iterator(root_ / directory_name(kind))) {
      const std::string name = entry.path().filename().string();
      if (const auto tmp = name.find(".tmp-"); tmp != std::string::npos) {
        // Temp files of a live writer are in flight, not debris.
        const long pid = std::strtol(name.c_str() + tmp + 5, nullptr, 10);
        if (pid > 0 && ::kill(static_cast<pid_t>(pid), 0) == 0) continue;
        std::error_code ec;
        if (fs::remove(entry.path(), ec)) ++report.removed_temp_files;
        continue;
      }
      if (name.size() <= 5 || name.compare(name.size() - 5, 5, ".json") != 0) continue;
      try {
        load_envelope(kind, entry.path());
        ++report.entities;
      } catch (const Error&) {
        report.unreadable.push_back(entry.path().string());
      }
    }
  }
  return report;
}

}  // namespace ontonote
